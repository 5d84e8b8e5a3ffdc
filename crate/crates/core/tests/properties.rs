use std::path::Path;

use proptest::prelude::*;

use pfrac_core::failure::{failure_stress, FailureInputs};
use pfrac_core::fem::{
    assemble_global, element_displacement_system, element_phase_system_with, DofPattern,
    ElementSystem, MeshGeometry, PhaseReaction,
};
use pfrac_core::io::config::format_config;
use pfrac_core::io::parse_config;
use pfrac_core::mesh::generate_structured;
use pfrac_core::model::damage_from_history;
use pfrac_core::solver::Simulation;
use pfrac_core::split::{split_energy, undamaged_energy, Strain2D};
use pfrac_core::{AnalysisMode, CrackDensity, Lame, MaterialParams, ModelConfig};

fn lame(nu: f64) -> Lame {
    MaterialParams::new(210.0, nu, 2.7e-3, AnalysisMode::PlaneStrain)
        .unwrap()
        .in_plane_lame()
        .unwrap()
}

fn strain() -> impl Strategy<Value = Strain2D> {
    (-1e-2..1e-2f64, -1e-2..1e-2f64, -1e-2..1e-2f64).prop_map(|(a, b, c)| Strain2D::new(a, b, c))
}

proptest! {
    #[test]
    fn split_parts_are_nonnegative_and_sum_to_total(e in strain(), nu in 0.0..0.49f64) {
        let lame = lame(nu);
        let s = split_energy(&e, &lame);
        prop_assert!(s.psi_plus >= 0.0 && s.psi_minus >= 0.0);
        let total = undamaged_energy(&e, &lame);
        prop_assert!((s.psi_plus + s.psi_minus - total).abs() <= 1e-12 * total.max(1e-300));
    }

    #[test]
    fn history_update_dominates_and_never_decreases(
        old in proptest::collection::vec(0.0..1e-2f64, 4),
        strains in proptest::collection::vec(strain(), 4),
    ) {
        let lame = lame(0.3);
        let mut h = old.clone();
        Simulation::update_history(&mut h, &strains, &lame);
        for ((new, prev), e) in h.iter().zip(&old).zip(&strains) {
            prop_assert!(new >= prev);
            prop_assert!(*new >= split_energy(e, &lame).psi_plus);
        }
    }

    #[test]
    fn damage_is_bounded_and_monotone_in_history(
        xi in 0i64..3,
        threshold in any::<bool>(),
        h1 in 0.0..50.0f64,
        dh in 0.0..50.0f64,
    ) {
        let mut c = ModelConfig::new(CrackDensity::from_xi(xi).unwrap(), 0.01).unwrap();
        if xi == 0 {
            c = c.with_supplemental_threshold(threshold).unwrap();
        }
        let a = damage_from_history(h1, &c, 5e-3).unwrap();
        let b = damage_from_history(h1 + dh, &c, 5e-3).unwrap();
        // ξ = 2 jumps straight to d = 1 past the threshold
        let top = if xi == 2 { 1.0 } else { 1.0 - f64::EPSILON };
        prop_assert!((0.0..=top).contains(&a) && (0.0..=top).contains(&b));
        prop_assert!(b >= a);
    }

    #[test]
    fn failure_load_does_not_grow_with_crack_length(
        xi in 0i64..2,
        a0 in 0.1..0.8f64,
        da in 0.0..0.1f64,
    ) {
        let material = MaterialParams::new(210.0, 0.3, 2.7e-3, AnalysisMode::PlaneStrain).unwrap();
        let c = ModelConfig::new(CrackDensity::from_xi(xi).unwrap(), 0.01).unwrap();
        let short = failure_stress(&FailureInputs::new(material, c, 0.005, a0)).unwrap();
        let long = failure_stress(&FailureInputs::new(material, c, 0.005, a0 + da)).unwrap();
        prop_assert!(long.sigma_y0c <= short.sigma_y0c * (1.0 + 1e-12));
    }

    #[test]
    fn assembled_matrices_are_symmetric(
        seed in proptest::collection::vec(-1.0..1.0f64, 64),
        xi in 0i64..3,
        lumped in any::<bool>(),
    ) {
        let mesh = generate_structured(1.0, 0.6, 3, 2, None).unwrap();
        let geo = MeshGeometry::new(&mesh).unwrap();
        let n = mesh.num_nodes();
        let u: Vec<f64> = (0..2 * n).map(|i| 1e-3 * seed[i % seed.len()]).collect();
        let d: Vec<f64> = (0..n).map(|i| 0.5 + 0.49 * seed[(i + 7) % seed.len()]).collect();
        let lame = lame(0.3);
        let config = ModelConfig::new(CrackDensity::from_xi(xi).unwrap(), 0.05).unwrap();
        let reaction = if lumped { PhaseReaction::Lumped } else { PhaseReaction::Consistent };

        let d_points = geo.phase_at_points(&d);
        let u_sys: Vec<ElementSystem> = (0..geo.num_elements())
            .map(|e| {
                let de: [f64; 4] = d_points[4 * e..4 * e + 4].try_into().unwrap();
                element_displacement_system(geo.element(e), &geo.gather_vector(e, &u), &de, &lame, 1e-7).into()
            })
            .collect();
        let d_sys: Vec<ElementSystem> = (0..geo.num_elements())
            .map(|e| {
                let h = [seed[e].abs(), seed[e + 1].abs(), seed[e + 2].abs(), seed[e + 3].abs()];
                element_phase_system_with(geo.element(e), &geo.gather_scalar(e, &d), &h, &config, 5e-3, reaction).into()
            })
            .collect();
        for (pattern, systems) in [
            (DofPattern::new(geo.connectivity(), n, 2), u_sys),
            (DofPattern::new(geo.connectivity(), n, 1), d_sys),
        ] {
            let dense = assemble_global(&pattern, &systems).unwrap().matrix.to_dense();
            let scale = dense.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            for (i, row) in dense.iter().enumerate() {
                for (j, v) in row.iter().enumerate().take(i) {
                    prop_assert!((v - dense[j][i]).abs() <= 1e-13 * scale);
                }
            }
        }
    }

    #[test]
    fn config_survives_format_and_parse(
        xi in 0i64..3,
        l in 0.001..0.1f64,
        gc in 1e-4..1e-2f64,
        nu in 0.0..0.49f64,
        nx in 1usize..50,
        ny in 1usize..50,
        steps in 0usize..500,
        passes in 1usize..5,
        total in -0.1..0.1f64,
        plane_stress in any::<bool>(),
        lumped in any::<bool>(),
    ) {
        let text = format!(
            "material.youngs_modulus = 210\nmaterial.poisson_ratio = {nu}\nmaterial.gc = {gc}\n\
             material.mode = {}\nmodel.xi = {xi}\nmodel.length_scale = {l}\nmesh.nx = {nx}\nmesh.ny = {ny}\n\
             schedule.total_displacement = {total}\nschedule.steps = {steps}\nsolver.passes = {passes}\n\
             solver.phase_reaction = {}\n",
            if plane_stress { "plane_stress" } else { "plane_strain" },
            if lumped { "lumped" } else { "consistent" },
        );
        let path = Path::new("generated.cfg");
        let first = parse_config(&text, path).unwrap();
        let second = parse_config(&format_config(&first), path).unwrap();
        prop_assert_eq!(first, second);
    }
}
