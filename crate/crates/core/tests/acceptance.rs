//! Acceptance suite: one pass/fail line per criterion, nonzero exit if any
//! criterion fails. Each criterion runs the matching `reproduce` group at its
//! stated tolerance, adds direct checks where the group alone is not enough,
//! and enforces the stated runtime budget.

use std::time::{Duration, Instant};

use sicyig_core::config::SensorConfig;
use sicyig_core::deer::{self, concentration_from_spacing, DeerScenario};
use sicyig_core::fabstats;
use sicyig_core::magnetostatics::find_xopt;
use sicyig_core::reproduce::{reproduce, ReproduceOptions, Status};
use sicyig_core::spin::{resonance_fields, SpinSystem};

struct Outcome {
    ok: bool,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { ok: true, notes: Vec::new() }
    }

    fn require(&mut self, ok: bool, note: String) {
        if !ok {
            self.ok = false;
            self.notes.push(note);
        }
    }
}

fn run_group(cfg: &SensorConfig, group: &str, out: &mut Outcome) {
    let opts = ReproduceOptions {
        rows: Some(vec![group.to_string()]),
        ..Default::default()
    };
    match reproduce(cfg, &opts) {
        Ok(rep) => {
            out.require(!rep.rows.is_empty(), format!("group {group} produced no rows"));
            for r in &rep.rows {
                out.require(
                    r.status != Status::Fail,
                    format!("{}: computed {} vs {} ({})", r.claim, r.computed, r.reference, r.tolerance),
                );
            }
        }
        Err(e) => out.require(false, format!("group {group}: {e}")),
    }
}

fn gradient(cfg: &SensorConfig, out: &mut Outcome) {
    run_group(cfg, "gradient", out);
    let narrow = find_xopt(&cfg.stripe).unwrap();
    out.require((narrow.x_opt_nm - 150.0).abs() <= 10.0, format!("x_opt {}", narrow.x_opt_nm));
    out.require(
        (narrow.g_max_g_per_nm - 0.5).abs() <= 0.05,
        format!("g_max {}", narrow.g_max_g_per_nm),
    );
    let wide = find_xopt(&cfg.stripe.with_width(800.0)).unwrap();
    out.require((wide.x_opt_nm - 230.0).abs() <= 15.0, format!("W=800 x_opt {}", wide.x_opt_nm));
}

fn snr(cfg: &SensorConfig, out: &mut Outcome) {
    run_group(cfg, "snr", out);
    let ratio = (0.0004f64 / 0.2).sqrt();
    out.require((ratio - 0.0447).abs() < 5e-5, format!("collection ratio {ratio}"));
    let scaled = (6300.0 * ratio).round();
    out.require((282.0..=286.0).contains(&scaled), format!("6300 scaled to {scaled}"));
}

fn yield_(cfg: &SensorConfig, out: &mut Outcome) {
    run_group(cfg, "yield", out);
    for (k, p) in [(0, 0.3679), (1, 0.3679), (2, 0.1839), (3, 0.0613)] {
        let got = fabstats::poisson_pmf(k, 1.0);
        out.require((got - p).abs() < 5e-5, format!("P({k}) = {got}"));
    }
}

fn deer_model(cfg: &SensorConfig, out: &mut Outcome) {
    run_group(cfg, "deer", out);
    // Lower target density gives a slower decay at every delay.
    let sparse = DeerScenario {
        c2d_per_nm2: concentration_from_spacing(9.0),
        ..cfg.deer.clone()
    };
    let dense = DeerScenario {
        c2d_per_nm2: concentration_from_spacing(5.0),
        ..cfg.deer.clone()
    };
    for td in [0.5, 1.0, 2.0, 4.0, 8.0] {
        let vs = deer::plane_signal(&sparse, td).unwrap();
        let vd = deer::plane_signal(&dense, td).unwrap();
        out.require(vs > vd, format!("td {td}: sparse {vs} not above dense {vd}"));
    }
}

fn spectra(cfg: &SensorConfig, out: &mut Outcome) {
    run_group(cfg, "spectra", out);
    let v2 = cfg.spin_system("V2").cloned().unwrap_or_else(SpinSystem::v2);
    let trityl = cfg.spin_system("trityl").cloned().unwrap_or_else(SpinSystem::trityl);
    let f = cfg.spectrum.freq_ghz;
    let lines = resonance_fields(&v2, f, [0.0, 0.0, 1.0]).unwrap();
    let t = resonance_fields(&trityl, f, [0.0, 0.0, 1.0]).unwrap();
    out.require(lines.len() == 3 && t.len() == 1, format!("{} V2 lines, {} trityl lines", lines.len(), t.len()));
    if lines.len() == 3 && t.len() == 1 {
        let d = (lines[1].resonance_field_g - t[0].resonance_field_g).abs();
        out.require(d <= 1.0, format!("central line offset {d} G"));
    }
}

fn main() {
    let cfg = SensorConfig::default();
    type Check = fn(&SensorConfig, &mut Outcome);
    let criteria: [(&str, Check, Option<Duration>); 9] = [
        ("1 gradient optimum", gradient, Some(Duration::from_secs(1))),
        ("2 homogeneity", |c, o| run_group(c, "homogeneity", o), Some(Duration::from_secs(1))),
        ("3 linewidth and resolution chain", |c, o| run_group(c, "linewidth", o), None),
        ("4 SNR identities", snr, None),
        ("5 Poisson yield", yield_, None),
        ("6 photonic gaps and design", |c, o| run_group(c, "photonics", o), Some(Duration::from_secs(60))),
        ("7 DEER model validity", deer_model, Some(Duration::from_secs(120))),
        ("8 spectra structure", spectra, None),
        ("9 SWR qualitative suite", |c, o| run_group(c, "swr", o), None),
    ];
    let mut failed = 0;
    for (name, check, budget) in criteria {
        let mut out = Outcome::new();
        let t0 = Instant::now();
        check(&cfg, &mut out);
        let elapsed = t0.elapsed();
        if let Some(limit) = budget {
            out.require(elapsed <= limit, format!("runtime {:.2?} over {:.0?}", elapsed, limit));
        }
        let verdict = if out.ok { "PASS" } else { "FAIL" };
        println!("criterion {name}: {verdict} ({:.2?})", elapsed);
        for n in &out.notes {
            println!("    {n}");
        }
        if !out.ok {
            failed += 1;
        }
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
