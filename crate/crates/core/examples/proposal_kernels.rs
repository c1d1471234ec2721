//! The three GMALA proposal kernels on one lifted state: proposals for a
//! shared noise vector, proposal log-densities and acceptance ratios.
//!
//! cargo run --release --example proposal_kernels

use lifted_mala::kernels::{
    log_mh_ratio, picard_solve, q1_log_density, q1_propose, q2_propose, q3_log_density,
    q3_propose,
};
use lifted_mala::prelude::*;

fn main() -> lifted_mala::Result<()> {
    let target = Preset::Anisotropic;
    let skew = SkewDrift::rotation(1.0);
    let state = LiftedState::new(Point::<2>::new(2.0, 0.5), Direction::Plus);
    let chi = Point::<2>::new(0.3, -0.7);
    let h = 0.05;
    let picard = PicardConfig::default();

    let q1 = q1_propose(&target, &skew, &state, h, chi);
    let q2 = q2_propose(&target, &skew, &state, h, chi, &picard)?;
    let q3 = q3_propose(&target, &skew, &state, h, chi)?;

    println!("x = ({:.4}, {:.4}), xi = +1, h = {h}", state.x[0], state.x[1]);
    for (kernel, out) in [(Kernel::Q1, q1), (Kernel::Q2, q2), (Kernel::Q3, q3)] {
        let ratio = log_mh_ratio(kernel, &target, &skew, &state, &out.y, h)?;
        println!(
            "{kernel}: y = ({:.6}, {:.6})  picard iterations = {:>2}  log MH ratio = {:+.3e}",
            out.y[0], out.y[1], out.picard_iters, ratio
        );
    }

    println!(
        "log Q1(x, y1) = {:.4}, log Q3(x, y3) = {:.4}",
        q1_log_density(&target, &skew, state.xi, &state.x, &q1.y, h),
        q3_log_density(&target, &skew, state.xi, &state.x, &q3.y, h)?
    );

    // The fixed-point solver on its own: a contraction converges, an
    // expansion is reported as divergence.
    let contraction = picard_solve(|y: &Point<2>| y * 0.5 + Point::<2>::new(1.0, 1.0), Point::<2>::zeros(), &picard)?;
    println!("contraction fixed point {:?} after {} updates", contraction.0.as_slice(), contraction.1);
    match picard_solve(|y: &Point<2>| y * 1.5 + Point::<2>::new(1.0, 0.0), Point::<2>::new(10.0, 0.0), &picard) {
        Err(e) => println!("expansion: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
