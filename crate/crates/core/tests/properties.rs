use std::sync::Arc;

use proptest::prelude::*;

use renyi_lab::channel::{random_channel, ChannelFamily};
use renyi_lab::entropy::{relative_entropy, renyi_entropy};
use renyi_lab::integral::z_tilde;
use renyi_lab::io::{channel_from_str, channel_to_string, max_entry_difference, operator_from_str, operator_to_string};
use renyi_lab::lab::{jensen_concave_check, jensen_convex_check, resolvent_jensen_check};
use renyi_lab::operator::Operator;
use renyi_lab::quadrature::QuadratureScheme;
use renyi_lab::random::{haar_unitary_operator, random_density, random_operator, seeded_rng, DensityOptions};
use renyi_lab::spectral::{loewner_leq, power};
use renyi_lab::{spectral_decompose, BlockAlgebra, Density, Hermitian};

const DIMS: [&[usize]; 5] = [&[1], &[2], &[3], &[2, 2], &[1, 2, 1]];

fn algebra(i: usize) -> Arc<BlockAlgebra> {
    Arc::new(BlockAlgebra::unweighted(DIMS[i].to_vec()).unwrap())
}

fn density(alg: &Arc<BlockAlgebra>, seed: u64, degenerate: bool) -> Density {
    let opts = DensityOptions {
        degenerate,
        ..Default::default()
    };
    random_density(alg, &opts, &mut seeded_rng(seed)).unwrap()
}

fn normalised(h: &Density) -> Density {
    let t = h.trace_re();
    Density::new(Hermitian::mirrored(h.as_operator().scale(1.0 / t))).unwrap()
}

fn family(i: usize) -> ChannelFamily {
    ChannelFamily::ALL[i % ChannelFamily::ALL.len()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spectral_decomposition_resolves_the_identity(d in 0..5usize, seed: u64, degenerate: bool) {
        let alg = algebra(d);
        let h = density(&alg, seed, degenerate);
        let spec = spectral_decompose(&h, 1e-8).unwrap();
        let mut sum = Operator::zeros(alg.clone());
        let mut rebuilt = Operator::zeros(alg.clone());
        for (&l, p) in spec.eigenvalues().iter().zip(spec.projections()) {
            let p = p.as_operator();
            prop_assert!(max_entry_difference(&(p * p), p).unwrap() < 1e-10);
            sum = &sum + p;
            rebuilt = &rebuilt + &p.scale(l);
        }
        prop_assert!(max_entry_difference(&sum, &Operator::identity(alg)).unwrap() < 1e-10);
        prop_assert!(max_entry_difference(&rebuilt, h.as_operator()).unwrap() < 1e-10);
    }

    #[test]
    fn renyi_entropy_is_unitarily_invariant_and_bounded(d in 0..5usize, seed: u64, alpha in 0.1..4.0f64) {
        prop_assume!((alpha - 1.0).abs() > 1e-3);
        let alg = algebra(d);
        let h = normalised(&density(&alg, seed, false));
        let u = haar_unitary_operator(&alg, &mut seeded_rng(seed ^ 0x5a5a));
        let uh = Density::new(Hermitian::mirrored(&(&u * h.as_operator()) * &u.adjoint())).unwrap();
        let s = renyi_entropy(&h, alpha).unwrap().value;
        let su = renyi_entropy(&uh, alpha).unwrap().value;
        prop_assert!((s - su).abs() < 1e-10);
        prop_assert!(s >= -1e-12 && s <= (alg.total_dim() as f64).ln() + 1e-12);
    }

    #[test]
    fn channels_keep_states_states(d in 0..5usize, f in 0..4usize, seed: u64) {
        let alg = algebra(d);
        let phi = random_channel(&alg, family(f), seed).unwrap();
        let h = density(&alg, seed.wrapping_add(1), false);
        let out = phi.apply_hermitian(&h).unwrap();
        prop_assert!((out.trace_re() - h.trace_re()).abs() < 1e-10);
        prop_assert!(out.min_eigenvalue().unwrap() > -1e-10);
        prop_assert!(out.as_operator().l1_norm() <= h.as_operator().l1_norm() + 1e-10);
    }

    #[test]
    fn jensen_orders_hold_for_positive_unital_maps(d in 0..5usize, f in 0..4usize, seed: u64, a in 0.05..0.95f64) {
        let alg = algebra(d);
        let phi = random_channel(&alg, family(f), seed).unwrap();
        let h = density(&alg, seed.wrapping_mul(3), false);
        prop_assert!(jensen_concave_check(&phi, &h, a, 1e-8).unwrap().holds);
        prop_assert!(jensen_convex_check(&phi, &h, 1.0 + a, 1e-8).unwrap().holds);
        let r = resolvent_jensen_check(&phi, &h, a * 10.0, 1e-8).unwrap();
        prop_assert!(r.holds());
    }

    #[test]
    fn relative_entropy_is_nonnegative_and_contracts(d in 0..5usize, f in 0..4usize, seed: u64) {
        let alg = algebra(d);
        let h = normalised(&density(&alg, seed, false));
        let k = normalised(&density(&alg, seed.wrapping_add(7), false));
        let dk = relative_entropy(&h, &k, 1e-7).unwrap();
        prop_assert!(dk >= -1e-12);
        let phi = random_channel(&alg, family(f), seed).unwrap();
        if phi.properties().completely_positive {
            let ph = Density::new(phi.apply_hermitian(&h).unwrap()).unwrap();
            let pk = Density::new(phi.apply_hermitian(&k).unwrap()).unwrap();
            prop_assert!(relative_entropy(&ph, &pk, 1e-7).unwrap() <= dk + 1e-10);
        }
    }

    #[test]
    fn truncated_integral_stays_below_the_power(d in 0..5usize, seed: u64, a in 0.1..0.9f64, e in 1..5i32) {
        let alg = algebra(d);
        let h = density(&alg, seed, false);
        let scheme = QuadratureScheme::new(10f64.powi(-e), 10f64.powi(e)).unwrap();
        let z = z_tilde(&h, a, &scheme).unwrap();
        let target = power(&h, a).unwrap();
        prop_assert!(loewner_leq(&z, &target, 1e-10).unwrap().holds);
    }

    #[test]
    fn operators_and_channels_round_trip_exactly(d in 0..5usize, f in 0..4usize, seed: u64) {
        let alg = algebra(d);
        let x = random_operator(&alg, &mut seeded_rng(seed));
        let back = operator_from_str(&operator_to_string(&x).unwrap()).unwrap();
        prop_assert!(max_entry_difference(&x, &back).unwrap() <= 1e-15);

        let phi = random_channel(&alg, family(f), seed).unwrap();
        let psi = channel_from_str(&channel_to_string(&phi).unwrap(), None).unwrap();
        let diff = (phi.superoperator() - psi.superoperator()).camax();
        prop_assert!(diff <= 1e-15);
    }
}
