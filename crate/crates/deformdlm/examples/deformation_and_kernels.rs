//! The spatial building blocks: the exponential correlation over deformed
//! distances, the Gaussian prior correlation over geographic distances, and
//! the linear (geometric-anisotropy) deformation with fixed anchors.
//!
//! Run with: cargo run --example deformation_and_kernels

use nalgebra::Matrix2;

use deformdlm::simgen::{default_grid_sites, default_lambda};
use deformdlm::spatial::{
    frobenius_gap, linear_deformation, prior_correlation, spatial_correlation, Deformation,
};

fn main() {
    let sites = default_grid_sites();
    println!(
        "{} grid sites on the unit square; anchors at indices {:?}",
        sites.count(),
        sites.anchors()
    );

    // Isotropic kernel: exponential decay in geographic distance.
    let identity = Deformation::identity(&sites);
    let phi = 0.4;
    let b_iso = spatial_correlation(&identity, phi).unwrap();
    println!(
        "\nisotropic correlation at phi = {phi}: B[1,2] = {:.4} (sites 1/3 apart), B[1,16] = {:.4} (opposite corners)",
        b_iso.matrix()[(0, 1)],
        b_iso.matrix()[(0, 15)]
    );

    // Geometric anisotropy: diag(1,3) * rotation(pi/4). Its Gram matrix is
    // 9I - 4*ones, so correlation decays three times faster along one
    // diagonal of the square than along the other.
    let lambda = default_lambda();
    let gram = lambda.transpose() * lambda;
    println!(
        "\nanisotropy transform Lambda^T Lambda = [[{}, {}], [{}, {}]]",
        gram[(0, 0)],
        gram[(0, 1)],
        gram[(1, 0)],
        gram[(1, 1)]
    );

    let deformed = linear_deformation(&sites, &lambda).unwrap();
    let b_aniso = spatial_correlation(&deformed, phi).unwrap();
    // compare two pairs at equal geographic distance but different direction
    let along = (0usize, 5usize); // diagonal aligned with the compressed axis
    let across = (1usize, 4usize); // the perpendicular diagonal
    println!(
        "equal geographic separations, deformed correlations: {:.4} vs {:.4}",
        b_aniso.matrix()[(along.0, along.1)],
        b_aniso.matrix()[(across.0, across.1)]
    );

    // Anchors never move; everything else does.
    let moved: Vec<usize> = (0..sites.count())
        .filter(|&n| deformed.coords().column(n) != sites.coords().column(n))
        .collect();
    println!(
        "anchored sites kept their coordinates; {} of {} sites moved",
        moved.len(),
        sites.count()
    );
    println!(
        "squared Frobenius distance from the identity map: {:.3}",
        frobenius_gap(&identity, &deformed).unwrap()
    );

    // The deformation prior correlation: a Gaussian kernel in geographic
    // space, so nearby sites deform together.
    let rd = prior_correlation(&sites, 10.0).unwrap();
    println!(
        "\ndeformation prior correlation (psi = 10): R[1,2] = {:.4}, R[1,16] = {:.2e}",
        rd.matrix()[(0, 1)],
        rd.matrix()[(0, 15)]
    );

    // The anisotropic kernel equals the isotropic kernel in transformed
    // coordinates: check one entry by hand.
    let s1 = sites.coords().column(4).into_owned();
    let s2 = sites.coords().column(9).into_owned();
    let diff = &s1 - &s2;
    let quad = (Matrix2::from(gram) * &diff).dot(&diff);
    let via_gram = (-phi * quad.sqrt()).exp();
    let d1 = deformed.coords().column(4);
    let d2 = deformed.coords().column(9);
    let via_map = (-phi * (d1 - d2).norm()).exp();
    println!(
        "\nkernel through the Gram matrix: {via_gram:.10}\nkernel through mapped coordinates: {via_map:.10}"
    );
}
