// quick probe of subsolver rates on stiff quadratics
use nalgebra::DVector;
use qlp::{solve_unconstrained, FnObjective};

fn run(lams: [f64; 2], x0: Vec<f64>, eps: f64) -> (usize, f64, bool) {
    let obj = FnObjective {
        value_fn: move |x: &DVector<f64>| 0.5 * (lams[0] * x[0] * x[0] + lams[1] * x[1] * x[1]),
        gradient_fn: move |x: &DVector<f64>| DVector::from_vec(vec![lams[0] * x[0], lams[1] * x[1]]),
        modulus: lams[0].min(lams[1]),
    };
    let res = solve_unconstrained(&obj, DVector::from_vec(x0), eps, 100_000).unwrap();
    (res.iterations, res.final_grad_norm, res.converged())
}

fn main() {
    for (x0, label) in [(vec![1.0, 1.0], "x0=(1,1)"), (vec![1e-3, 1e-3], "x0=1e-3"), (vec![10.0, 10.0], "x0=10")] {
        let (it, r, ok) = run([1.0, 1e4], x0, 1e-8);
        println!("{label}: iters={it} resid={r:.2e} ok={ok}");
    }
    // dense spectrum variant
    let n = 50;
    let lams: Vec<f64> = (0..n).map(|i| 10f64.powf(4.0 * i as f64 / (n - 1) as f64)).collect();
    let l2 = lams.clone();
    let obj = FnObjective {
        value_fn: move |x: &DVector<f64>| 0.5 * x.iter().zip(&lams).map(|(xi, l)| l * xi * xi).sum::<f64>(),
        gradient_fn: move |x: &DVector<f64>| DVector::from_iterator(n, x.iter().zip(&l2).map(|(xi, l)| l * xi)),
        modulus: 1.0,
    };
    let res = solve_unconstrained(&obj, DVector::from_element(n, 1.0), 1e-8, 100_000).unwrap();
    println!("dense n=50 logspaced: iters={} resid={:.2e} ok={}", res.iterations, res.final_grad_norm, res.converged());
}
