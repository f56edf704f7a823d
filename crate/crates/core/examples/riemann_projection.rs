//! Stereographic projection of complex values onto the Riemann sphere and back.

use laplace_control::laplace::{inverse_stereographic, stereographic_project, ComplexVal};

fn main() -> laplace_control::Result<()> {
    for s in [
        ComplexVal::new(1.0, 0.0),
        ComplexVal::new(0.0, 2.0),
        ComplexVal::new(-3.0, -4.0),
        ComplexVal::new(1e-6, 0.0),
        ComplexVal::new(0.0, 1e6),
        ComplexVal::new(0.0, 0.0),
    ] {
        let p = stereographic_project(s)?;
        let back = inverse_stereographic(p.coord)?;
        println!(
            "s = {:>12.4e}{:+.4e}i  θ = {:+.6}  φ = {:+.6}{}  back {:.4e}{:+.4e}i",
            s.re,
            s.im,
            p.coord.theta,
            p.coord.phi,
            if p.degenerate { " (clamped)" } else { "" },
            back.re,
            back.im
        );
    }
    Ok(())
}
