//! Named built-in systems.

use nalgebra::DMatrix;

use crate::group::GroupSpec;
use crate::system::{Automorphism, ControlRange, LinearSystem, Translation};

pub const PRESET_NAMES: [&str; 4] = ["euclid_ab", "aff_example", "heisenberg_example", "torus_cat"];

/// Short human-readable description of a preset.
pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "euclid_ab" => "x -> 2x + u on R, U = [-1, 1], step 2/15",
        "aff_example" => "(x, y) -> (x e^u, y e^(2+u) + u) on Aff(2,R)_0, U = [-0.5, 0.5], step 0.125",
        "heisenberg_example" => {
            "(x1,x2,x3) -> (x1+x2+x2^2/2+u x2+u x3-u/2-u^2/3, x2+u, x2+x3-u/2) on H3, U = [-0.5, 0.5], step 0.25"
        }
        "torus_cat" => "(x, y) -> (2x + y, x + y) mod Z^2 on T^2, automorphism only (U = {0})",
        _ => return None,
    })
}

/// Value of the entropy of the preset's admissible pairs as documented in the
/// literature, in an unstated logarithm base.
pub fn documented_entropy(name: &str) -> Option<f64> {
    match name {
        "aff_example" => Some(2.0),
        "heisenberg_example" => Some(0.0),
        _ => None,
    }
}

pub fn by_name(name: &str) -> Option<LinearSystem> {
    Some(match name {
        "euclid_ab" => euclid_ab(),
        "aff_example" => aff_example(),
        "heisenberg_example" => heisenberg_example(),
        "torus_cat" => torus_cat(),
        _ => return None,
    })
}

pub fn euclid_ab() -> LinearSystem {
    LinearSystem::euclidean(
        "euclid_ab",
        DMatrix::from_element(1, 1, 2.0),
        DMatrix::from_element(1, 1, 1.0),
        ControlRange::new(vec![-1.0], vec![1.0], 2.0 / 15.0).expect("valid box"),
    )
    .expect("valid preset")
}

pub fn aff_example() -> LinearSystem {
    LinearSystem::new(
        "aff_example",
        GroupSpec::aff_plus(),
        Automorphism::AffScale(2.0f64.exp()),
        Translation::AffExample,
        ControlRange::new(vec![-0.5], vec![0.5], 0.125).expect("valid box"),
    )
    .expect("valid preset")
}

pub fn heisenberg_example() -> LinearSystem {
    LinearSystem::new(
        "heisenberg_example",
        GroupSpec::heisenberg3(),
        Automorphism::HeisenbergShear,
        Translation::HeisenbergExample,
        ControlRange::new(vec![-0.5], vec![0.5], 0.25).expect("valid box"),
    )
    .expect("valid preset")
}

pub fn torus_cat() -> LinearSystem {
    LinearSystem::new(
        "torus_cat",
        GroupSpec::torus2(),
        Automorphism::Linear(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0])),
        Translation::Trivial,
        ControlRange::zero(1),
    )
    .expect("valid preset")
}

/// Replaces the control box and step of a system (e.g. from a scenario file).
pub fn with_control(mut sys: LinearSystem, control: ControlRange) -> crate::Result<LinearSystem> {
    let rebuilt = LinearSystem::new(sys.name.clone(), sys.group.clone(), sys.f0.clone(), sys.b.clone(), control)?;
    sys.control = rebuilt.control;
    Ok(sys)
}
