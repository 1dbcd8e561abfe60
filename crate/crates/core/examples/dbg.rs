use nlma::convex::{ConvexFunction, SublevelProfile};
use nlma::rearrangement::KSymmetricProfile;
use nlma::numerics::{OperatorParams, ExtendedMeasure};
use nlma::numerics::quad::*;

fn main() {
    let s: f64 = 0.75;
    let u = ConvexFunction::radial_cone(2, 1.0).unwrap();
    let prof = SublevelProfile::new_exact(u.excess_at(&[0.0,0.0]).unwrap(), 1).unwrap();
    let sym = KSymmetricProfile::new(&prof);
    let params = OperatorParams::new(2, 1, s).unwrap();
    let p = params.kernel_exponent();
    let k = 1.0f64;
    let komega = 2.0;
    let opt = QuadOptions::with_tols(1e-8, 1e-6);
    let inner = |az: f64| -> f64 {
        let z = [az];
        let integrand = |w: f64| -> f64 {
            let v = match sym.eval(az * w, &z) {
                Ok(ExtendedMeasure::Finite(v)) => v,
                _ => return f64::NAN,
            };
            v * w.powf(k - 1.0) * (1.0 + w * w).powf(-0.5 * p)
        };
        let split = (10.0 * (1.0 + 1.0 / az)).min(1e8);
        let head = quad_1d_singular(&integrand, 0.0, split, None, None, &opt).unwrap();
        let v1 = integrand(split) * split.powf(1.0 + 2.0 * s);
        let v2 = integrand(2.0 * split) * (2.0 * split).powf(1.0 + 2.0 * s);
        let qhat = if v1 > 0.0 && v2 > 0.0 { (1.0 + 2.0 * s + (v1 / v2).log2()).max(1.1) } else { 1.0 + 2.0 * s };
        let tail = quad_tail(&integrand, split, qhat, &opt).unwrap();
        komega * az.powf(k - p) * (head.value + tail.value)
    };
    let j = |z: f64| inner(z);
    let z_split = 30.0f64;
    let head = quad_1d_singular(&j, 0.0, z_split, Some(2.0*s-1.0), None, &opt).unwrap();
    let j1 = j(z_split); let j2 = j(2.0*z_split);
    let qhat = (j1/j2).log2().max(1.1);
    println!("outer qhat = {qhat}");
    let tail = quad_tail(&j, z_split, qhat, &opt).unwrap();
    println!("rust int_0^30 J = {} (err {})", head.value, head.err);
    println!("rust int_30^inf J = {} (err {})", tail.value, tail.err);
    // finer probe of J near zero
    for z in [1e-6f64, 1e-5, 1e-4, 1e-3, 1e-2] {
        println!("J({z}) = {}, J*sqrt(z) = {}", j(z), j(z)*z.sqrt());
    }
}
