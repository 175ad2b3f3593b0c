//! Smallest end-to-end use of the library: build the damped-qubit model,
//! start from a random family member, run to convergence.

use gqab::bottleneck::IbProblem;
use gqab::channels::amplitude_damping_model;

fn main() -> gqab::Result<()> {
    let (rho_x, channel) = amplitude_damping_model(0.7, 0.3)?;
    let problem = IbProblem::new(rho_x, channel, 1.0, 2.0, 2)?;

    let mut rng = rand::rng();
    let initial = problem.random_member(&mut rng)?;
    let trace = gqab::solver::run(
        &problem,
        &initial,
        problem.family(),
        &gqab::SolverConfig::default(),
    )?;
    assert!(trace.monotone);
    println!("{} -> {}", trace.records[0].objective, trace.final_objective());
    Ok(())
}
