use ndarray::{array, Array1, Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::nn::{build_network, Architecture, NetworkConfig};

fn matrix_from(values: Array2<f64>) -> EmbeddingMatrix {
    let n = values.nrows();
    EmbeddingMatrix::new(
        values,
        (0..n).map(|i| format!("l{i}")).collect(),
        (0..n).map(|_| "g".to_string()).collect(),
    )
    .unwrap()
}

fn random_levels(count: usize, shape: (usize, usize, usize), seed: u64) -> Vec<EncodedLevel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let mut data = Array3::zeros(shape);
            for r in 0..shape.0 {
                for c in 0..shape.1 {
                    data[[r, c, rng.random_range(0..shape.2)]] = 1.0;
                }
            }
            EncodedLevel {
                id: format!("lvl{i}"),
                generator: format!("gen{}", i % 3),
                tensor: OneHotTensor { data },
            }
        })
        .collect()
}

fn network(architecture: Architecture, seed: u64) -> Network {
    build_network(&NetworkConfig {
        architecture,
        input_shape: (10, 10, 5),
        output_count: 4,
        learning_rate: 0.01,
        epochs: 1,
        batch_size: 1,
        seed,
        early_stopping: None,
    })
    .unwrap()
}

#[test]
fn basic_embedding_has_width_64() {
    let net = network(Architecture::Basic, 0);
    let levels = random_levels(1, (10, 10, 5), 0);
    let emb = extract_embedding(&net, &levels[0].tensor).unwrap();
    assert_eq!(emb.len(), 64);
    let again = extract_embedding(&net, &levels[0].tensor).unwrap();
    assert_eq!(emb, again);
}

#[test]
fn vgg16_embedding_has_width_1000() {
    let net = network(Architecture::Vgg16, 0);
    let levels = random_levels(1, (10, 10, 5), 1);
    let emb = extract_embedding(&net, &levels[0].tensor).unwrap();
    assert_eq!(emb.len(), 1000);
}

#[test]
fn collinear_points_put_all_variance_on_the_first_component() {
    // Points on a line through 3-space.
    let direction = [1.0, 2.0, -0.5];
    let values = Array2::from_shape_fn((12, 3), |(i, j)| (i as f64 - 5.0) * direction[j] + 0.25);
    let model = pca_fit(&matrix_from(values), 2).unwrap();
    assert!(model.explained_variance_ratio[0] >= 0.999);
}

#[test]
fn components_are_orthonormal() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let values = Array2::from_shape_fn((20, 7), |_| rng.random_range(-4.0..4.0));
    let model = pca_fit(&matrix_from(values), 5).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            let dot = model.components.row(i).dot(&model.components.row(j));
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((dot - expected).abs() < 1e-8, "({i},{j}) dot {dot}");
        }
    }
}

/// Closed-form symmetric 3x3 eigendecomposition (trigonometric method plus
/// cross-product eigenvectors), independent of the Jacobi path.
mod analytic3 {
    use ndarray::{Array1, Array2};

    pub fn eigenvalues(a: &Array2<f64>) -> [f64; 3] {
        let p1 = a[[0, 1]].powi(2) + a[[0, 2]].powi(2) + a[[1, 2]].powi(2);
        let q = (a[[0, 0]] + a[[1, 1]] + a[[2, 2]]) / 3.0;
        let p2 = (a[[0, 0]] - q).powi(2)
            + (a[[1, 1]] - q).powi(2)
            + (a[[2, 2]] - q).powi(2)
            + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let det_b = {
            let b = |i: usize, j: usize| (a[[i, j]] - if i == j { q } else { 0.0 }) / p;
            b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1))
                - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
                + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0))
        };
        let r = (det_b / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let e1 = q + 2.0 * p * phi.cos();
        let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        let e2 = 3.0 * q - e1 - e3;
        [e1, e2, e3]
    }

    pub fn eigenvector(a: &Array2<f64>, lambda: f64) -> Array1<f64> {
        let row = |i: usize| {
            Array1::from(vec![
                a[[i, 0]] - if i == 0 { lambda } else { 0.0 },
                a[[i, 1]] - if i == 1 { lambda } else { 0.0 },
                a[[i, 2]] - if i == 2 { lambda } else { 0.0 },
            ])
        };
        let cross = |u: &Array1<f64>, v: &Array1<f64>| {
            Array1::from(vec![
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ])
        };
        let (r0, r1, r2) = (row(0), row(1), row(2));
        let candidates = [cross(&r0, &r1), cross(&r0, &r2), cross(&r1, &r2)];
        let best = candidates
            .into_iter()
            .max_by(|a, b| a.dot(a).total_cmp(&b.dot(b)))
            .unwrap();
        let norm = best.dot(&best).sqrt();
        best / norm
    }
}

#[test]
fn components_match_covariance_eigendecomposition_oracle() {
    let values = array![
        [1.0, 2.0, 0.0],
        [3.0, 5.0, 1.0],
        [4.0, 1.0, 7.0],
        [0.0, 8.0, 2.0]
    ];
    let matrix = matrix_from(values.clone());
    let model = pca_fit(&matrix, 3).unwrap();

    let means = values.sum_axis(ndarray::Axis(0)) / 4.0;
    let centered = &values - &means;
    let covariance = centered.t().dot(&centered) / 3.0;
    let eigenvalues = analytic3::eigenvalues(&covariance);
    assert!(eigenvalues[0] > eigenvalues[1] + 1e-6);
    assert!(eigenvalues[1] > eigenvalues[2] + 1e-6);

    for (i, &lambda) in eigenvalues.iter().enumerate() {
        let oracle = analytic3::eigenvector(&covariance, lambda);
        let component = model.components.row(i).to_owned();
        let diff_plus = (&component - &oracle).mapv(f64::abs).sum();
        let diff_minus = (&component + &oracle).mapv(f64::abs).sum();
        assert!(
            diff_plus.min(diff_minus) < 1e-8,
            "component {i} off by {}",
            diff_plus.min(diff_minus)
        );
    }
}

#[test]
fn full_rank_fit_reconstructs_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let values = Array2::from_shape_fn((30, 6), |_| rng.random_range(-2.0..2.0));
    let matrix = matrix_from(values.clone());
    let model = pca_fit(&matrix, 6).unwrap();
    for row in values.rows() {
        let centered = &row - &model.column_means;
        let mut reconstructed = model.column_means.clone();
        for comp in model.components.rows() {
            let weight = centered.dot(&comp);
            reconstructed.scaled_add(weight, &comp.to_owned());
        }
        let err: f64 = (&row - &reconstructed).mapv(f64::abs).sum();
        assert!(err < 1e-8, "reconstruction error {err}");
    }
}

#[test]
fn explained_variance_ratios_are_sorted_and_sum_to_one_at_full_rank() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let values = Array2::from_shape_fn((40, 5), |_| rng.random_range(-1.0..1.0));
    let model = pca_fit(&matrix_from(values), 5).unwrap();
    let evr = &model.explained_variance_ratio;
    for w in evr.windows(2) {
        assert!(w[0] >= w[1] - 1e-12);
    }
    let total: f64 = evr.iter().sum();
    assert!((total - 1.0).abs() < 1e-9, "total {total}");
    assert!(evr.iter().all(|&v| (0.0..=1.0).contains(&v)));
}

#[test]
fn rank_two_data_projects_isometrically() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    // Two fixed orthonormal directions in 20-D.
    let mut u: Array1<f64> = Array1::from_shape_fn(20, |_| rng.random_range(-1.0..1.0));
    u = &u / u.dot(&u).sqrt();
    let mut v: Array1<f64> = Array1::from_shape_fn(20, |_| rng.random_range(-1.0..1.0));
    let proj = v.dot(&u);
    v = &v - &(proj * &u);
    v = &v / v.dot(&v).sqrt();

    let coords: Vec<(f64, f64)> = (0..100)
        .map(|_| (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)))
        .collect();
    let values = Array2::from_shape_fn((100, 20), |(i, j)| {
        coords[i].0 * u[j] + coords[i].1 * v[j] + 0.5
    });
    let matrix = matrix_from(values);
    let model = pca_fit(&matrix, 2).unwrap();
    assert!(model.explained_variance_ratio.iter().sum::<f64>() >= 0.999);
    let points = project_2d(&model, &matrix).unwrap();
    for i in 0..100 {
        for j in (i + 1)..100 {
            let original = ((coords[i].0 - coords[j].0).powi(2)
                + (coords[i].1 - coords[j].1).powi(2))
            .sqrt();
            let projected = ((points[i].pc1 - points[j].pc1).powi(2)
                + (points[i].pc2 - points[j].pc2).powi(2))
            .sqrt();
            if original > 1e-9 {
                assert!(
                    (projected - original).abs() / original < 1e-6,
                    "pair ({i},{j}): {projected} vs {original}"
                );
            }
        }
    }
}

#[test]
fn fits_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let values = Array2::from_shape_fn((25, 8), |_| rng.random_range(-1.0..1.0));
    let matrix = matrix_from(values);
    let a = pca_fit(&matrix, 3).unwrap();
    let b = pca_fit(&matrix, 3).unwrap();
    assert_eq!(a.components, b.components);
    assert_eq!(a.column_means, b.column_means);
    assert_eq!(a.explained_variance_ratio, b.explained_variance_ratio);
}

#[test]
fn projection_centers_the_fitting_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let values = Array2::from_shape_fn((30, 4), |_| rng.random_range(0.0..10.0));
    let matrix = matrix_from(values);
    let model = pca_fit(&matrix, 2).unwrap();
    let points = project_2d(&model, &matrix).unwrap();
    let mean1: f64 = points.iter().map(|p| p.pc1).sum::<f64>() / points.len() as f64;
    let mean2: f64 = points.iter().map(|p| p.pc2).sum::<f64>() / points.len() as f64;
    assert!(mean1.abs() < 1e-9);
    assert!(mean2.abs() < 1e-9);
}

#[test]
fn duplicate_rows_project_to_identical_points() {
    let mut values = Array2::zeros((6, 5));
    for (i, mut row) in values.rows_mut().into_iter().enumerate() {
        let base = (i / 2) as f64; // rows come in identical pairs
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = base * (j as f64 + 1.0);
        }
    }
    let matrix = matrix_from(values);
    let model = pca_fit(&matrix, 2).unwrap();
    let points = project_2d(&model, &matrix).unwrap();
    for pair in points.chunks(2) {
        assert_eq!(pair[0].pc1, pair[1].pc1);
        assert_eq!(pair[0].pc2, pair[1].pc2);
    }
}

#[test]
fn projection_is_affine() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let values = Array2::from_shape_fn((10, 6), |_| rng.random_range(-1.0..1.0));
    let matrix = matrix_from(values.clone());
    let model = pca_fit(&matrix, 2).unwrap();

    let delta = Array1::from_shape_fn(6, |_| rng.random_range(-0.5..0.5));
    let mut shifted = values.clone();
    for mut row in shifted.rows_mut() {
        row += &delta;
    }
    let base_points = project_2d(&model, &matrix).unwrap();
    let shifted_points = project_2d(&model, &matrix_from(shifted)).unwrap();
    let d1 = delta.dot(&model.components.row(0));
    let d2 = delta.dot(&model.components.row(1));
    for (b, s) in base_points.iter().zip(&shifted_points) {
        assert!((s.pc1 - b.pc1 - d1).abs() < 1e-9);
        assert!((s.pc2 - b.pc2 - d2).abs() < 1e-9);
    }
}

#[test]
fn identical_rows_are_degenerate() {
    let values = Array2::from_elem((5, 4), 0.1);
    let err = pca_fit(&matrix_from(values), 2).unwrap_err();
    assert!(matches!(err, CompressError::DegenerateData(_)));
}

#[test]
fn gram_route_matches_covariance_route() {
    // Same data viewed as 8x20 (gram route) after transposing a 20x8 fit is
    // not meaningful, so instead check the gram route on wide data against
    // reconstruction and orthonormality.
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let values = Array2::from_shape_fn((8, 20), |_| rng.random_range(-1.0..1.0));
    let matrix = matrix_from(values.clone());
    let model = pca_fit(&matrix, 7).unwrap();
    for i in 0..7 {
        for j in 0..7 {
            let dot = model.components.row(i).dot(&model.components.row(j));
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((dot - expected).abs() < 1e-8);
        }
    }
    // 8 rows span at most 7 centered directions, so 7 components
    // reconstruct every row.
    let model_full = model;
    for row in values.rows() {
        let centered = &row - &model_full.column_means;
        let mut reconstructed = model_full.column_means.clone();
        for comp in model_full.components.rows() {
            let w = centered.dot(&comp);
            reconstructed.scaled_add(w, &comp.to_owned());
        }
        let err: f64 = (&row - &reconstructed).mapv(f64::abs).sum();
        assert!(err < 1e-8, "gram-route reconstruction error {err}");
    }
}

#[test]
fn vanilla_dr_on_boxoban_levels() {
    let levels = random_levels(15, (10, 10, 5), 60);
    assert_eq!(levels[0].tensor.flatten().len(), 500);
    let points = vanilla_dr(&levels).unwrap();
    assert_eq!(points.len(), 15);
    assert!(points.iter().all(|p| p.pc1.is_finite() && p.pc2.is_finite()));
    assert_eq!(points[3].level_id, "lvl3");
    assert_eq!(points[3].generator, "gen0");
}

#[test]
fn identical_levels_in_a_varied_set_coincide() {
    let mut levels = random_levels(10, (10, 10, 5), 61);
    levels[7] = EncodedLevel {
        id: "dup".into(),
        generator: levels[2].generator.clone(),
        tensor: levels[2].tensor.clone(),
    };
    let points = vanilla_dr(&levels).unwrap();
    assert_eq!(points[2].pc1, points[7].pc1);
    assert_eq!(points[2].pc2, points[7].pc2);
}

#[test]
fn cnn_dr_equals_manual_composition() {
    let net = network(Architecture::Basic, 2);
    let levels = random_levels(12, (10, 10, 5), 62);
    let pipeline = cnn_dr(&net, &levels).unwrap();
    let matrix = embedding_matrix(&net, &levels).unwrap();
    let model = pca_fit(&matrix, 2).unwrap();
    let manual = project_2d(&model, &matrix).unwrap();
    assert_eq!(pipeline, manual);
}
