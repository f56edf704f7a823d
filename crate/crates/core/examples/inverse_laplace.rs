//! Numerical inverse Laplace transform of a few closed-form pairs.
//!
//! The same query points serve every transform at a given time, which is what
//! lets a network emit all of them in one shot.

use laplace_control::laplace::{ilt_fsi, ilt_query, ilt_reconstruct, ComplexVal, IltParams};

fn main() -> laplace_control::Result<()> {
    let p = IltParams::default();
    let one = ComplexVal::new(1.0, 0.0);
    let times = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0];
    let sine = ilt_fsi(|s| one.div(s.mul(s).add(one)), &times, &p)?;
    let decay = ilt_fsi(|s| one.div(s.add(one)), &times, &p)?;
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "t", "L⁻¹ 1/(s²+1)", "sin t", "L⁻¹ 1/(s+1)", "e^-t");
    for (i, t) in times.iter().enumerate() {
        println!("{t:>6.2} {:>12.6} {:>12.6} {:>12.6} {:>12.6}", sine[i], t.sin(), decay[i], (-t).exp());
    }

    // query/reconstruct split: evaluate the transform yourself at the returned points
    let q = ilt_query(1.5, &p)?;
    println!("\n{} query points at t = 1.5, first {:?}", q.points.len(), q.points[0]);
    // a unit step delayed by 0.4 s: e^{-0.4 s}/s
    let values: Vec<ComplexVal> = q
        .points
        .iter()
        .map(|s| {
            let m = (-0.4 * s.re).exp();
            ComplexVal::new(m * (0.4 * s.im).cos(), -m * (0.4 * s.im).sin()).div(*s)
        })
        .collect();
    println!("delayed step at t = 1.5: {:.6} (exact 1)", ilt_reconstruct(&values, &q)?);
    Ok(())
}
