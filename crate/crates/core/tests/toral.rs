use nalgebra::{DMatrix, Matrix2, Vector2};
use orbtrace::toral::{
    compute_conjugacy, hyperbolicity_check, perturb_action, toral_trace, HyperbolicSplitting, DEFAULT_MODULUS_TOLERANCE,
};
use orbtrace::{build_heisenberg_example, IntegerMatrix, ToralActionSpec, ToralPoint64};

fn cat() -> IntegerMatrix {
    IntegerMatrix::unimodular(vec![vec![2, 1], vec![1, 1]]).unwrap()
}

fn to_nalgebra(m: &IntegerMatrix) -> DMatrix<i64> {
    let n = m.dim();
    DMatrix::from_fn(n, n, |i, j| m.get(i, j))
}

#[test]
fn heisenberg_moduli_match_nalgebra() {
    let t = build_heisenberg_example(&cat(), &cat()).unwrap();
    let a = &t.matrices()[0];
    let report = hyperbolicity_check(a, DEFAULT_MODULUS_TOLERANCE).unwrap();
    let dense: DMatrix<f64> = to_nalgebra(a).map(|v| v as f64);
    let mut moduli: Vec<f64> = dense.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    moduli.sort_by(f64::total_cmp);
    assert_eq!(moduli.len(), report.eigen_moduli.len());
    for (x, y) in moduli.iter().zip(&report.eigen_moduli) {
        assert!((x - y).abs() < 1e-6, "{x} vs {y}");
    }
    let phi = (3.0 + 5f64.sqrt()) / 2.0;
    assert_eq!(report.eigen_moduli.iter().filter(|&&m| (m - phi).abs() < 1e-12).count(), 3);
    assert!(report.expansive && report.gap > 1e-9);
}

#[test]
fn heisenberg_relations_hold_in_integer_arithmetic() {
    for (x, y) in [(cat(), cat()), (cat(), cat().pow(3).unwrap()), (cat(), cat().inverse().unwrap())] {
        let t = build_heisenberg_example(&x, &y).unwrap();
        let [a, b, c] = [0, 1, 2].map(|i| to_nalgebra(&t.matrices()[i]));
        assert_eq!(&a * &c, &c * &a);
        assert_eq!(&b * &c, &c * &b);
        assert_eq!(&a * &b, &b * &a * &c);
    }
}

#[test]
fn splitting_projector_matches_eigenvectors() {
    let split = HyperbolicSplitting::<f64>::new(&cat()).unwrap();
    let eig = Matrix2::new(2.0, 1.0, 1.0, 1.0).symmetric_eigen();
    let k = if eig.eigenvalues[0] > 1.0 { 0 } else { 1 };
    let u: Vector2<f64> = eig.eigenvectors.column(k).into();
    let pu = u * u.transpose();
    for i in 0..2 {
        for j in 0..2 {
            assert!((split.unstable_projector()[(i, j)] - pu[(i, j)]).abs() < 1e-12);
        }
    }
    assert!((split.constant() - (1.0 + 5f64.sqrt())).abs() < 1e-9);
}

#[test]
fn displaced_midpoint_is_shadowed_along_unstable_direction() {
    // orbit of x0 with v added at index w: the shadow is A^i x0 + A^{i-w} P_u v
    let a = Matrix2::new(2.0, 1.0, 1.0, 1.0);
    let eig = a.symmetric_eigen();
    let k = if eig.eigenvalues[0] > 1.0 { 0 } else { 1 };
    let u: Vector2<f64> = eig.eigenvectors.column(k).into();
    let v = Vector2::new(3e-4, -2e-4);
    let pv = u * u.dot(&v);
    let (n, w) = (41, 20);
    let wrap = |z: Vector2<f64>| ToralPoint64::new(vec![z[0], z[1]]);
    let mut lifted = vec![Vector2::new(0.1234, 0.5678)];
    for _ in 1..n {
        let next = a * lifted.last().unwrap();
        lifted.push(next.map(|c| c.rem_euclid(1.0)));
    }
    let mut pseudo: Vec<Vector2<f64>> = lifted.clone();
    pseudo[w] += v;
    for i in w + 1..n {
        pseudo[i] = (a * pseudo[i - 1]).map(|c| c.rem_euclid(1.0));
    }
    let orbit: Vec<ToralPoint64> = pseudo.iter().map(|&z| wrap(z)).collect();
    let split = HyperbolicSplitting::<f64>::new(&cat()).unwrap();
    let trace = toral_trace(&split, &orbit, None).unwrap();
    let ainv = a.try_inverse().unwrap();
    for i in 8..n - 8 {
        let shift = if i >= w {
            (0..i - w).fold(pv, |acc, _| a * acc)
        } else {
            (0..w - i).fold(pv, |acc, _| ainv * acc)
        };
        let expected = wrap(lifted[i] + shift);
        assert!(trace.points[i].distance(&expected) < 1e-9, "index {i}");
    }
    assert!(trace.epsilon <= split.constant() * trace.input_delta + 1e-12);
}

// minimises max_{|k| <= n} d(T^k y, S^k x), widening the orbit window one
// step at a time so each stage starts inside the previous stage's basin
fn orbit_match(s: &orbtrace::PerturbedToralAction64, x: &ToralPoint64, n: usize) -> ToralPoint64 {
    let (back, fwd) = (0, 1);
    let lambda = (3.0 + 5f64.sqrt()) / 2.0;
    let walk = |start: &ToralPoint64, len: usize, step: &dyn Fn(&ToralPoint64) -> ToralPoint64| {
        let mut out = vec![start.clone()];
        for _ in 0..len {
            out.push(step(out.last().unwrap()));
        }
        out
    };
    let sf = walk(x, n, &|p| s.generator(fwd, p));
    let sb = walk(x, n, &|p| s.generator(back, p));
    let mut best = x.clone();
    for len in 1..=n {
        let cost = |y: &ToralPoint64| {
            let tf = walk(y, len, &|p| s.base_generator(fwd, p));
            let tb = walk(y, len, &|p| s.base_generator(back, p));
            tf.iter()
                .zip(&sf)
                .chain(tb.iter().zip(&sb))
                .map(|(p, q)| p.distance(q))
                .fold(0.0, f64::max)
        };
        let mut h = 1e-2 / (20.0 * lambda.powi(len as i32 - 1));
        let rounds = if len == n { 8 } else { 2 };
        for _ in 0..rounds {
            let centre = best.clone();
            let mut best_cost = cost(&centre);
            for i in -20..=20 {
                for j in -20..=20 {
                    let y = centre.translate(&[i as f64 * h, j as f64 * h]);
                    let c = cost(&y);
                    if c < best_cost {
                        best_cost = c;
                        best = y;
                    }
                }
            }
            h /= 8.0;
        }
    }
    best
}

#[test]
fn conjugacy_matches_orbit_matching() {
    let t = ToralActionSpec::cyclic(cat()).unwrap();
    let s = perturb_action::<f64>(&t, 1e-3, 1).unwrap();
    let sample = compute_conjugacy(&t, &s, 30, 16).unwrap();
    for (x, fx) in sample.table.iter().step_by(25).take(10) {
        let y = orbit_match(&s, x, 12);
        assert!(y.distance(fx) < 1e-6, "{:?}: {} vs {}", x.coords(), y.distance(fx), x.distance(fx));
    }
}

#[test]
fn displacement_grows_with_amplitude() {
    let t = ToralActionSpec::cyclic(cat()).unwrap();
    let sups: Vec<f64> = [1e-4, 5e-4, 1e-3]
        .iter()
        .map(|&amp| {
            let s = perturb_action::<f64>(&t, amp, 3).unwrap();
            compute_conjugacy(&t, &s, 20, 24).unwrap().sup_displacement
        })
        .collect();
    assert!(sups[0] < sups[1] && sups[1] < sups[2], "{sups:?}");
    // same field shape at every amplitude: f - Id scales almost linearly
    assert!((sups[2] / sups[0] - 10.0).abs() < 1.0, "{sups:?}");
}

#[test]
fn zero_amplitude_is_identity_for_heisenberg() {
    let t = build_heisenberg_example(&cat(), &cat()).unwrap();
    let s = perturb_action::<f64>(&t, 0.0, 0).unwrap();
    let sample = compute_conjugacy(&t, &s, 10, 6).unwrap();
    assert!(sample.identity);
    assert_eq!(sample.sup_displacement, 0.0);
    assert_eq!(sample.max_relation_defect(), 0.0);
}

#[test]
fn single_precision_conjugacy() {
    let t = ToralActionSpec::cyclic(cat()).unwrap();
    let s = perturb_action::<f32>(&t, 1e-3, 1).unwrap();
    let sample = compute_conjugacy(&t, &s, 12, 16).unwrap();
    assert!((sample.sup_displacement as f64) <= 1.25 * sample.shadowing_bound);
    assert!(sample.hyperbolic_residual < 1e-4);
}
