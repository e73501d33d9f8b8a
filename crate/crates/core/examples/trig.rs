//! The trigonometric-polynomial count next to the Bott index. With the
//! default triple the count is -2 times the Bott index; the folded triple
//! always gives 0.
//!
//!     cargo run --release --example trig

use topo_index::bott::{
    bott_index_small, trig_method_index, BottOptions, CompressedPair, TrigOptions, TrigPolynomialTriple,
};
use topo_index::model::{periodic_observables, Boundary, ModelSpec, Sample};
use topo_index::spectral::{diagonalize, fermi_basis};

fn main() -> topo_index::Result<()> {
    let triple = TrigPolynomialTriple::default_projector();
    let report = triple.validate();
    println!(
        "default triple: degree {}, |gh| {:.2e}, |f²+g²+h²-f| {:.2e}",
        triple.h.degree(),
        report.product_residual,
        report.projection_residual
    );

    for side in [8, 12] {
        let spec = ModelSpec::chern(side, Boundary::Periodic).with_disorder(2.0, 1);
        let sample = Sample::generate(&spec, 0)?;
        let eig = diagonalize(&sample.hamiltonian)?;
        let obs = periodic_observables(&sample.lattice)?;
        let pair = CompressedPair::from_fermi(&fermi_basis(&eig, 0.0), &obs)?;
        let (u1, v1) = (pair.u1.as_ref(), pair.v1.as_ref());
        let bott = bott_index_small(u1, v1, BottOptions::default())?;
        let count = trig_method_index(u1, v1, &triple, TrigOptions::default())?;
        let folded = trig_method_index(u1, v1, &TrigPolynomialTriple::folded(), TrigOptions::default())?;
        println!("L={side}: Bott {}  count {count}  folded {folded}", bott.index);
    }
    Ok(())
}
