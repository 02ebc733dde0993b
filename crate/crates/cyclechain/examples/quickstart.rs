//! Minimal tour: evolve a point mass under the fractional diffusion and
//! read off a moment and a mixing bound.

use cyclechain::{evolve, mixing_bound, trig_moment, CycleSize, DiffusionParams, Pmf};

fn main() -> cyclechain::Result<()> {
    let m = CycleSize::new(8)?;
    let params = DiffusionParams::new(m, 1.0, 0.5, 0.3)?; // alpha, beta, t
    let start = Pmf::delta(m, m.index(0)?);

    let later = evolve(&start, &params)?; // law at time t
    let moment = trig_moment(&later, 1); // E[exp(i theta)] under that law
    let bound = mixing_bound(&start, &params)?;

    println!("mass at state 2 after t:  {}", later.as_slice()[2]);
    println!("resultant length:         {}", moment.norm());
    println!("TV to uniform is at most: {bound}");
    Ok(())
}
