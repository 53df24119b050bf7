use gibq::construction::{make_bump, perturbed_data, sample_base_data, InflationParams};
use gibq::flow::{duhamel, linear_flow, InitialPair};
use gibq::harness::mixed_difference;
use gibq::lattice::{convolve, power_k, FrequencyLattice, SpectralField, C64};
use gibq::norms::{check_algebra, fourier_lebesgue, sobolev};
use gibq::series::PicardSeries;
use proptest::prelude::*;

fn hermitian_field(raw: Vec<(i64, f64, f64)>) -> SpectralField {
    let mut entries = Vec::new();
    for (xi, re, im) in raw {
        if xi == 0 {
            entries.push((0, C64::new(re, 0.0)));
        } else {
            entries.push((xi, C64::new(re, im)));
            entries.push((-xi, C64::new(re, -im)));
        }
    }
    SpectralField::from_entries(FrequencyLattice::torus(), entries).unwrap()
}

fn field() -> impl Strategy<Value = SpectralField> {
    prop::collection::vec((0i64..40, -1.0f64..1.0, -1.0f64..1.0), 1..8).prop_map(hermitian_field)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decomposition_identity(seed in 0u64..1000, big_n in 128i64..2048) {
        let p = InflationParams::with_frequency(2, 2, -0.75, -0.75, Some(0.25), big_n).unwrap();
        let bump = make_bump(&p).unwrap();
        let base = sample_base_data(seed, 0.5, 0.5).unwrap();
        let data = perturbed_data(&base, &bump).unwrap();
        let t = 0.05;
        let xi1 = |pair: &InitialPair| PicardSeries::new(pair, 2, t, 16).unwrap().term(1).unwrap().final_value().clone();
        let direct = xi1(&data).sub(&xi1(&bump.phi)).unwrap();
        let mixed = mixed_difference(&base, &bump, 2, t, 16).unwrap();
        prop_assert!(direct.sub(&mixed).unwrap().l1() <= 1e-10 * direct.l1().max(1e-300));
    }

    #[test]
    fn young_inequality_and_hermitian_products(f in field(), g in field()) {
        let h = convolve(&f, &g).unwrap();
        prop_assert!(h.l1() <= f.l1() * g.l1() * (1.0 + 1e-12));
        prop_assert!(h.is_hermitian(1e-12));
        prop_assert!(check_algebra(&f, &g).unwrap().fl1.holds);
    }

    #[test]
    fn power_is_repeated_convolution(f in field(), k in 2usize..4) {
        let mut acc = f.clone();
        for _ in 1..k {
            acc = convolve(&acc, &f).unwrap();
        }
        let p = power_k(&f, k).unwrap();
        prop_assert!(p.sub(&acc).unwrap().l2() <= 1e-12 * acc.l2().max(1e-300));
    }

    #[test]
    fn duhamel_multilinear_and_bounded(f in field(), g in field(), alpha in -2.0f64..2.0, t in 0.05f64..1.0) {
        let z = SpectralField::zero(FrequencyLattice::torus());
        let flow = |u: &SpectralField| linear_flow(&InitialPair::new(u.clone(), z.clone()).unwrap(), t, 16).unwrap();
        let (sf, sg) = (flow(&f), flow(&g));
        let combo = flow(&f.axpy(alpha, &g).unwrap());
        let lhs = duhamel(&[&combo, &sf], t).unwrap();
        let rhs = duhamel(&[&sf, &sf], t).unwrap().axpy(alpha, &duhamel(&[&sg, &sf], t).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().l1() <= 1e-12 * (lhs.l1() + rhs.l1()).max(1e-300));
        // l1 bound with the half-square of the horizon
        prop_assert!(lhs.l1() <= 0.5 * t * t * combo.sup_l1() * sf.sup_l1() * (1.0 + 1e-10));
        prop_assert!(duhamel(&[&sf, &sg], 0.0).unwrap().is_empty());
    }

    #[test]
    fn norm_ordering_for_negative_regularity(f in field(), s in -3.0f64..-0.1) {
        prop_assert!(sobolev(&f, s) <= sobolev(&f, 0.0) * (1.0 + 1e-12));
        prop_assert!(fourier_lebesgue(&f, s, 2.0) <= fourier_lebesgue(&f, s, 1.0) * (1.0 + 1e-12));
    }
}
