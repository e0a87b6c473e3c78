//! Gaussian formulas against the truncated Fock-space oracle.

use gqr_core::channels::{family, Scheme, SchemeParams};
use gqr_core::detection::s_overlap;
use gqr_core::fock::{
    default_oracle_step, fock_build, fock_fidelity, fock_qfi, fock_s_overlap, number_state_loss, FockOptions,
    LEAKAGE_BUDGET,
};
use gqr_core::metrology::{fidelity, qfi_sld};

fn check(scheme: Scheme, n_s: f64, n_b: f64, k: f64) {
    let p = SchemeParams::new(scheme, n_s, n_b, k).unwrap();
    let opts = FockOptions::default();
    let (a, b) = (fock_build(&p.at_kappa(0.0), opts).unwrap(), fock_build(&p, opts).unwrap());
    assert!(a.leakage() <= LEAKAGE_BUDGET && b.leakage() <= LEAKAGE_BUDGET);
    let (ga, gb) = (p.at_kappa(0.0).receiver().unwrap(), p.receiver().unwrap());
    let df = (fock_fidelity(&a, &b).unwrap() - fidelity(&ga, &gb).unwrap()).abs();
    let dq = (fock_s_overlap(&a, &b, 0.4).unwrap() - s_overlap(&ga, &gb, 0.4).unwrap()).abs();
    assert!(df <= 1e-4, "{scheme} fidelity {df:e}");
    assert!(dq <= 1e-4, "{scheme} Q_s {dq:e}");
    let fq = fock_qfi(|x| fock_build(&p.at_kappa(x), opts), k, default_oracle_step(k)).unwrap().value;
    let gq = qfi_sld(family(p), k, None).unwrap().value;
    assert!(((fq - gq) / gq).abs() <= 1e-3, "{scheme} QFI {fq} vs {gq}");
}

#[test]
fn coherent_agrees() {
    check(Scheme::CoherentThermal, 0.5, 0.2, 0.3);
}

#[test]
fn tmss_agrees() {
    check(Scheme::Tmss, 0.5, 0.2, 0.5);
}

#[test]
fn model1_agrees() {
    check(Scheme::Model1, 0.2, 0.2, 0.3);
}

#[test]
fn model2_agrees() {
    check(Scheme::Model2, 0.2, 0.0, 0.5);
}

#[test]
fn truncation_converges() {
    let p = SchemeParams::new(Scheme::Tmss, 1.0, 0.5, 0.4).unwrap();
    let g = fidelity(&p.at_kappa(0.0).receiver().unwrap(), &p.receiver().unwrap()).unwrap();
    let err = |d: usize| {
        let o = FockOptions { cutoff: Some(d), cap: None, allow_leakage: true };
        let (a, b) = (fock_build(&p.at_kappa(0.0), o).unwrap(), fock_build(&p, o).unwrap());
        ((fock_fidelity(&a, &b).unwrap() - g).abs(), b.leakage())
    };
    let (e1, l1) = err(8);
    let (e2, l2) = err(16);
    let (e3, l3) = err(32);
    assert!(l3 < l2 && l2 < l1);
    assert!(e3 <= e2 && e2 < e1, "{e1:e} {e2:e} {e3:e}");
    assert!(e3 < 1e-6);
}

#[test]
fn fock_input_reaches_the_loss_limit() {
    // |n⟩ through a pure-loss channel: QFI n/(κ(1−κ))
    let (n, k) = (2, 0.3);
    let q = fock_qfi(|x| number_state_loss(n, x), k, default_oracle_step(k)).unwrap().value;
    let exact = n as f64 / (k * (1.0 - k));
    assert!(((q - exact) / exact).abs() < 1e-5, "{q} {exact}");
}
