//! The shipped meshes are exactly what the generators produce.

use hjbfem::mesh::{check_acute, load_mesh, write_mesh};
use hjbfem::problems::{lattice_domain, triangle_base_mesh, DEFAULT_SIDE_ROWS};

#[test]
fn triangle_asset_matches_generator() {
    let text = include_str!("../assets/triangle.mesh2");
    assert_eq!(text, write_mesh(&triangle_base_mesh()));
    let mesh = load_mesh(text).unwrap();
    assert_eq!(mesh.n_interior(), 1);
    assert!(check_acute(&mesh).is_strictly_acute);
}

#[test]
fn lattice_asset_matches_generator() {
    let text = include_str!("../assets/lattice.mesh2");
    assert_eq!(text, write_mesh(&lattice_domain(DEFAULT_SIDE_ROWS)));
    let mesh = load_mesh(text).unwrap();
    assert_eq!(mesh.n_interior(), 110);
    assert!(check_acute(&mesh).is_strictly_acute);
}
