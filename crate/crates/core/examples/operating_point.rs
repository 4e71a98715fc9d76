//! Print the bound and its largest terms at one Eb/N0.
//!
//! cargo run --release --example operating_point -- gaussian 250 1.21

use ura_bounds::optimize::{bound_at_ebno, SearchState};
use ura_bounds::{pe_bound_at_power, CodebookKind, OptimizerSettings, PowerParams, SystemParams};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kind: CodebookKind = args.get(1).map_or("gaussian", |s| s.as_str()).parse().expect("codebook");
    let ka: u32 = args.get(2).map_or(Ok(250), |s| s.parse()).expect("ka");
    let ebno: f64 = args.get(3).map_or(Ok(1.21), |s| s.parse()).expect("ebno");
    let params = SystemParams::new(30_000, 100, ka, 0.05).expect("params");
    let settings = OptimizerSettings::default();
    let r = match args.get(4) {
        Some(ratio) => {
            let p = params.power_from_ebno_db(ebno);
            let power = PowerParams { p, p_prime: ratio.parse::<f64>().expect("ratio") * p, ebno_db: ebno };
            pe_bound_at_power(&params, &power, kind, &settings).expect("bound")
        }
        None => bound_at_ebno(&params, kind, ebno, &settings, &mut SearchState::default(), None).expect("bound"),
    };
    println!(
        "{kind} Ka={ka} Eb/N0={ebno} dB: Pe <= {:.6e} (p0 {:.3e}, P'/P {:.4}, {:.1} s, {} inner evals)",
        r.pe(),
        r.log_p0.prob(),
        r.power.ratio(),
        r.diagnostics.wall_time_s,
        r.diagnostics.inner_evals
    );
    let mut terms = r.terms.clone();
    terms.sort_by(|a, b| b.weighted(ka).total_cmp(&a.weighted(ka)));
    for t in terms.iter().take(12) {
        println!(
            "  t={:3} weighted ln {:9.3} p {:10.3} q {:10.3} alpha {:.4} beta {:.3e} u {:.4e} v {:.4e} delta {:.4e} {:?}",
            t.t,
            t.weighted(ka),
            t.log_binom_pt + t.log_pt.ln(),
            t.log_binom_qt + t.log_qt.ln(),
            t.argmin.alpha,
            t.argmin.beta,
            t.argmin.u,
            t.argmin.v,
            t.argmin.delta,
            t.status
        );
    }
}
