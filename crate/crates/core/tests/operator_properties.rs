use cassi_amp::cube::{complement, random_aperture};
use cassi_amp::operator::densify;
use cassi_amp::rng::SeededStream;
use cassi_amp::{CassiModel, CodedAperture, HyperCube, MeasurementVector, Order};
use proptest::prelude::*;

fn model(m: usize, n: usize, l: usize, shots: usize, order: Order, seed: u64) -> CassiModel {
    let apertures = (0..shots)
        .map(|k| random_aperture(m, n, 0.5, seed + k as u64).unwrap())
        .collect();
    CassiModel::new(l, apertures, order).unwrap()
}

fn cube(m: usize, n: usize, l: usize, rng: &mut SeededStream) -> HyperCube {
    HyperCube::new(
        m,
        n,
        l,
        (0..m * n * l).map(|_| rng.standard_normal()).collect(),
    )
    .unwrap()
}

fn order_strategy() -> impl Strategy<Value = Order> {
    prop_oneof![Just(Order::Standard), Just(Order::HigherOrder)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn forward_is_linear(
        m in 1usize..7, n in 1usize..7, l in 1usize..5, shots in 1usize..4,
        order in order_strategy(), seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0,
    ) {
        let model = model(m, n, l, shots, order, seed);
        let mut rng = SeededStream::new(seed ^ 0x55);
        let (f1, f2) = (cube(m, n, l, &mut rng), cube(m, n, l, &mut rng));
        let combo = HyperCube::new(
            m, n, l,
            f1.values().iter().zip(f2.values()).map(|(x, y)| a * x + b * y).collect(),
        ).unwrap();
        let lhs = model.forward(&combo).unwrap();
        let (g1, g2) = (model.forward(&f1).unwrap(), model.forward(&f2).unwrap());
        for ((l, x), y) in lhs.values().iter().zip(g1.values()).zip(g2.values()) {
            prop_assert!((l - (a * x + b * y)).abs() <= 1e-12 * (1.0 + l.abs()));
        }
    }

    #[test]
    fn adjoint_identity(
        m in 1usize..9, n in 1usize..9, l in 1usize..6, shots in 1usize..4,
        order in order_strategy(), seed in any::<u64>(),
    ) {
        let model = model(m, n, l, shots, order, seed);
        let mut rng = SeededStream::new(seed.wrapping_add(1));
        let f = cube(m, n, l, &mut rng);
        let g = MeasurementVector::new((0..model.measurement_count()).map(|_| rng.standard_normal()).collect());
        let hf = model.forward(&f).unwrap();
        let htg = model.adjoint(&g).unwrap();
        let lhs: f64 = hf.values().iter().zip(g.values()).map(|(a, b)| a * b).sum();
        let rhs: f64 = f.values().iter().zip(htg.values()).map(|(a, b)| a * b).sum();
        let scale = f.values().iter().map(|v| v * v).sum::<f64>().sqrt()
            * g.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * scale);
    }

    #[test]
    fn column_norms_match_dense(
        m in 1usize..6, n in 1usize..6, l in 1usize..4, shots in 1usize..4,
        order in order_strategy(), seed in any::<u64>(),
    ) {
        let model = model(m, n, l, shots, order, seed);
        let dense = densify(&model).unwrap();
        let norms = model.column_norm_squares();
        for c in 0..dense.cols {
            let s: f64 = dense.column(c).iter().map(|v| v * v).sum();
            prop_assert!((s - norms.values()[c]).abs() <= 1e-12);
        }
    }
}

#[test]
fn standard_columns_have_unit_entries() {
    let a = random_aperture(6, 5, 0.5, 8).unwrap();
    let pair = vec![a.clone(), complement(&a)];
    let model = CassiModel::new(3, pair, Order::Standard).unwrap();
    let dense = densify(&model).unwrap();
    for c in 0..dense.cols {
        let nonzero: Vec<f64> = dense.column(c).into_iter().filter(|v| *v != 0.0).collect();
        assert_eq!(nonzero, vec![1.0], "column {c}");
    }
}

#[test]
fn closed_aperture_senses_nothing() {
    let model = CassiModel::new(
        3,
        vec![CodedAperture::filled(4, 4, false)],
        Order::HigherOrder,
    )
    .unwrap();
    let mut rng = SeededStream::new(2);
    let g = model.forward(&cube(4, 4, 3, &mut rng)).unwrap();
    assert!(g.values().iter().all(|v| *v == 0.0));
}

#[test]
fn energy_is_preserved_on_open_aperture() {
    // Each voxel's weights sum to one, so total detector flux equals total
    // cube flux when nothing is blocked.
    for order in [Order::Standard, Order::HigherOrder] {
        let model = CassiModel::new(5, vec![CodedAperture::filled(7, 6, true)], order).unwrap();
        let mut rng = SeededStream::new(9);
        let f = cube(7, 6, 5, &mut rng);
        let g = model.forward(&f).unwrap();
        let (sf, sg): (f64, f64) = (f.values().iter().sum(), g.values().iter().sum());
        assert!((sf - sg).abs() < 1e-10, "{order:?}: {sf} vs {sg}");
    }
}
