//! Random-node versus forest-fire sampling, and how NMI compares covers.
//!
//! ```text
//! cargo run --release --example sampling
//! ```

use kromfac::eval::{ff_sample, nmi, rn_sample, SampleSpec, Strategy};
use kromfac::kron::{kron_generate, KroneckerModel};
use kromfac::{Cover, Graph};

fn degree_summary(g: &Graph) -> String {
    let mut d = g.degrees();
    d.sort_unstable();
    let mean = d.iter().sum::<usize>() as f64 / d.len().max(1) as f64;
    format!("mean degree {mean:.2}, max {}", d.last().copied().unwrap_or(0))
}

fn main() -> kromfac::Result<()> {
    let model = KroneckerModel::new(vec![vec![0.95, 0.6], vec![0.6, 0.2]], 10)?;
    let g = kron_generate(&model, 1000, 4)?;
    println!("original:    {}", degree_summary(&g));
    let (rn, _) = rn_sample(&g, &SampleSpec::new(Strategy::Rn, 1))?;
    println!("RN 70%:      {}", degree_summary(&rn));
    let (ff, _) = ff_sample(&g, &SampleSpec::new(Strategy::Ff, 1))?;
    println!("FF 70%:      {}", degree_summary(&ff));

    let halves = Cover::new(vec![(0..20).collect(), (20..40).collect()], 40)?;
    let shifted = Cover::new(vec![(0..22).collect(), (22..40).collect()], 40)?;
    let everyone = Cover::new(vec![(0..40).collect()], 40)?;
    println!("NMI(halves, halves)   = {:.3}", nmi(&halves, &halves)?);
    println!("NMI(halves, shifted)  = {:.3}", nmi(&halves, &shifted)?);
    println!("NMI(halves, everyone) = {:.3}", nmi(&halves, &everyone)?);
    Ok(())
}
