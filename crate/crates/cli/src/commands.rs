use std::path::Path;

use serde_json::json;
use sicyig_core::config::LoadedConfig;
use sicyig_core::deer::{self, concentration_from_spacing, DeerTrace};
use sicyig_core::fabstats::{self, ImplantProfile};
use sicyig_core::magnetostatics::{effective_zeeman_shift, find_xopt, gradient_profile, EffectiveShift};
use sicyig_core::photonics::{find_gaps, k_path, lattice_from_zpl, nanobeam_widths, tm_bands, SEGMENT_LABELS};
use sicyig_core::report::{Cell, Table};
use sicyig_core::reproduce::{add_noise, reproduce, ReproduceOptions};
use sicyig_core::snr::{self, Excitation};
use sicyig_core::spin::{gradient_shifted_lines, powder_spectrum, SpinSystem};
use sicyig_core::swr::{dispersion_map, swr_lines};
use sicyig_core::{Error, Result};

use crate::args::*;
use crate::output::Output;

/// Outputs of one subcommand and whether every check it ran passed.
pub struct Run {
    pub outputs: Vec<Output>,
    pub failed: bool,
}

impl From<Vec<Output>> for Run {
    fn from(outputs: Vec<Output>) -> Self {
        Run { outputs, failed: false }
    }
}

pub fn field_map(cfg: &LoadedConfig, a: &FieldMapArgs) -> Result<Run> {
    let geom = &cfg.config.stripe;
    if a.xopt {
        let opt = find_xopt(geom)?;
        let rec = json!({"x_opt_nm": opt.x_opt_nm, "g_max_G_per_nm": opt.g_max_g_per_nm});
        return Ok(vec![Output::record("xopt", &rec)?].into());
    }
    let z0 = a.z_min_nm.unwrap_or(geom.center_nm[2] - geom.width_nm);
    let z1 = a.z_max_nm.unwrap_or(geom.center_nm[2] + geom.width_nm);
    if a.nz == 0 || z1 < z0 {
        return Err(Error::argument("empty z range"));
    }
    let dz = if a.nz > 1 { (z1 - z0) / (a.nz - 1) as f64 } else { 0.0 };
    let mut t = Table::new(&["x_nm", "z_nm", "Bx_G", "By_G", "Bz_G", "dBz_dx_G_per_nm"]);
    for j in 0..a.nz {
        let z = z0 + dz * j as f64;
        for s in gradient_profile(geom, a.x_min_nm, a.x_max_nm, a.nx, z)? {
            let [bx, by, bz] = s.b_dip_g;
            t.push(vec![
                s.position_nm[0].into(),
                z.into(),
                bx.into(),
                by.into(),
                bz.into(),
                s.grad_bz_x_g_per_nm.into(),
            ])?;
        }
    }
    Ok(vec![Output::table("field_map", t)].into())
}

pub fn swr(cfg: &LoadedConfig, a: &SwrArgs) -> Result<Run> {
    let c = &cfg.config;
    let model = c.swr_model();
    let freq = a.freq_ghz.unwrap_or(c.microwave_freq_ghz);
    let mut lines = Table::new(&["resonance_field_G", "strength", "edge"]);
    for l in swr_lines(&model, freq, &c.swr.scan)? {
        lines.push(vec![l.resonance_field_g.into(), l.oscillator_strength.into(), l.edge_localized.into()])?;
    }
    let mut disp = Table::new(&["B0_G", "mode", "freq_GHz"]);
    for p in dispersion_map(&model, &c.swr.scan, c.swr.dispersion_modes_count)? {
        disp.push(vec![p.b0_g.into(), p.mode.into(), p.freq_ghz.into()])?;
    }
    let mut out = vec![Output::table("swr_lines", lines), Output::table("swr_dispersion", disp)];
    if a.dispersion {
        out.reverse();
    }
    Ok(out.into())
}

fn is_probe(sys: &SpinSystem) -> bool {
    sys.label.eq_ignore_ascii_case("V2")
}

pub fn epr_spectrum(cfg: &LoadedConfig, a: &EprArgs) -> Result<Run> {
    let c = &cfg.config;
    let systems: Vec<&SpinSystem> = if a.systems.is_empty() {
        c.spin_systems.iter().collect()
    } else {
        a.systems
            .iter()
            .map(|l| {
                c.spin_system(l)
                    .ok_or_else(|| Error::argument(format!("no spin system labelled `{l}` in the config")))
            })
            .collect::<Result<_>>()?
    };
    if systems.is_empty() {
        return Err(Error::argument("config defines no spin systems"));
    }
    let freq = c.spectrum.freq_ghz;
    let grid = c.spectrum.grid()?;
    let axis = [0.0, 0.0, 1.0];
    let geom = &c.stripe;
    let x_probe = if a.gradient {
        geom.center_nm[0] + find_xopt(geom)?.x_opt_nm - c.probe_depth_nm
    } else {
        0.0
    };

    let mut outputs = Vec::new();
    let mut line_records = Vec::new();
    for sys in systems {
        let shift = if a.gradient {
            let x = if is_probe(sys) { x_probe } else { x_probe + c.deer.dx_nm };
            let b_iso = freq * 1e3 / (sys.g_iso() * sicyig_core::constants::MU_B_OVER_H_MHZ_PER_G);
            effective_zeeman_shift(geom, [x, geom.center_nm[1], geom.center_nm[2]], b_iso)?
        } else {
            EffectiveShift::zero()
        };
        // A line at B_r appears at B_r − shift, so sample the unshifted
        // spectrum at B + shift.
        let sampled: Vec<f64> = grid.iter().map(|b| b + shift.total_g).collect();
        let spec = powder_spectrum(sys, freq, &sampled, c.spectrum.orientation_count)?;
        let mut t = Table::new(&["B_G", "intensity"]);
        for (b, i) in grid.iter().zip(&spec.intensity) {
            t.push(vec![(*b).into(), (*i).into()])?;
        }
        outputs.push(Output::table(format!("spectrum_{}", sys.label), t));
        for l in gradient_shifted_lines(sys, freq, axis, &shift)? {
            line_records.push(json!({
                "system": sys.label,
                "resonance_field_G": l.resonance_field_g,
                "amplitude": l.amplitude,
                "transition": [l.transition.0, l.transition.1],
                "shift_G": shift.total_g,
            }));
        }
    }
    outputs.push(Output::record("epr_lines", &line_records)?);
    Ok(outputs.into())
}

pub fn deer_sim(cfg: &LoadedConfig, a: &DeerSimArgs, seed: u64) -> Result<Run> {
    let c = &cfg.config;
    let mut sc = c.deer.clone();
    if let Some(dx) = a.dx_nm {
        sc.dx_nm = dx;
    }
    if let Some(s) = a.spacing_nm {
        if !(s > 0.0) {
            return Err(Error::argument("spacing must be positive"));
        }
        sc.c2d_per_nm2 = concentration_from_spacing(s);
    }
    if let Some(c2d) = a.c2d_per_nm2 {
        sc.c2d_per_nm2 = c2d;
    }
    if let Some(pb) = a.pump_flip {
        sc.pump_flip_frac = pb;
    }
    sc.validate()?;
    let clean = deer::time_trace(&sc)?;
    let shown = match a.noise {
        Some(sigma) => add_noise(&clean, sigma, seed)?,
        None => clean.clone(),
    };
    let mut cols = vec!["td_us", "V"];
    if a.noise.is_some() {
        cols.push("V_noiseless");
    }
    if a.mc {
        cols.extend(["V_mc", "V_mc_stderr"]);
    }
    let mut t = Table::new(&cols);
    for (i, &td) in clean.td_us.iter().enumerate() {
        let mut row: Vec<Cell> = vec![td.into(), shown.v[i].into()];
        if a.noise.is_some() {
            row.push(clean.v[i].into());
        }
        if a.mc {
            let mc = deer::mc_oracle(&sc, td, c.monte_carlo.config_count, c.monte_carlo.spins_cap_count, seed)?;
            row.push(mc.v.into());
            row.push(mc.std_error.into());
        }
        t.push(row)?;
    }
    Ok(vec![Output::table("deer_trace", t)].into())
}

fn read_trace(path: &Path) -> Result<DeerTrace> {
    let bad = |m: String| Error::Parse { path: path.display().to_string(), line: 1, message: m };
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column `{name}`")))
    };
    let (it, iv) = (col("td_us")?, col("V")?);
    let mut trace = DeerTrace { td_us: Vec::new(), v: Vec::new() };
    for (n, rec) in rdr.records().enumerate() {
        let line = n + 2;
        let rec = rec.map_err(|e| Error::Parse { path: path.display().to_string(), line, message: e.to_string() })?;
        let num = |i: usize| -> Result<f64> {
            let s = rec.get(i).unwrap_or("");
            s.parse().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                line,
                message: format!("`{s}` is not a number"),
            })
        };
        trace.td_us.push(num(it)?);
        trace.v.push(num(iv)?);
    }
    Ok(trace)
}

pub fn deer_fit(cfg: &LoadedConfig, a: &DeerFitArgs) -> Result<Run> {
    let trace = read_trace(&a.trace)?;
    let c = &cfg.config;
    let fit = deer::fit_plane(&trace, &c.deer, &c.fit)?;
    let rec = json!({
        "dx_nm": fit.dx_nm,
        "C2D_per_nm2": fit.c2d_per_nm2,
        "residual": fit.residual,
        "flags": fit.flags,
        "sigma_dx_nm": fit.covariance[0][0].max(0.0).sqrt(),
        "sigma_C2D_per_nm2": fit.covariance[1][1].max(0.0).sqrt(),
        "iterations_count": fit.iterations,
        "points_count": trace.td_us.len(),
    });
    Ok(vec![Output::record("deer_fit", &rec)?].into())
}

pub fn snr(cfg: &LoadedConfig, a: &SnrArgs) -> Result<Run> {
    let mode = if a.resonant { Excitation::Resonant } else { Excitation::OffResonant };
    let rep = snr::snr_report(&cfg.config.snr, a.v, mode)?;
    Ok(vec![Output::record("snr", &rep)?].into())
}

fn parse_window(s: &str) -> Result<[f64; 2]> {
    let err = || Error::argument(format!("window `{s}` must look like z1:z2 (nm)"));
    let (a, b) = s.split_once(':').ok_or_else(err)?;
    let z1: f64 = a.trim().parse().map_err(|_| err())?;
    let z2: f64 = b.trim().parse().map_err(|_| err())?;
    if z2 < z1 {
        return Err(Error::argument(format!("window `{s}` is reversed")));
    }
    Ok([z1, z2])
}

pub fn yield_(cfg: &LoadedConfig, a: &YieldArgs) -> Result<Run> {
    let mut imp = cfg.config.implant.clone();
    let profile: ImplantProfile = match &a.profile {
        Some(p) => {
            imp.profile = p.clone();
            imp.load_profile(None)?
        }
        None => imp.load_profile(cfg.base_dir.as_deref())?,
    };
    if let Some(d) = a.dose {
        imp.aperture.dose_per_cm2 = d;
    }
    if let Some(d) = a.aperture_nm {
        imp.aperture.diameter_nm = d;
    }
    if let Some(d) = a.decimation {
        imp.aperture.decimation_frac = d;
    }
    if let Some(n) = a.devices {
        imp.devices_count = n;
    }
    if let Some(w) = &a.window {
        imp.window_nm = parse_window(w)?;
    }
    let est = fabstats::expected_count(&profile, &imp.aperture, None)?;
    let [z1, z2] = imp.window_nm;
    let p_window = fabstats::depth_window_probability(&profile, z1, z2)?;
    let hist = fabstats::poisson_histogram(est.lambda, imp.devices_count)?;
    let usable = fabstats::usable_yield(est.lambda, p_window, imp.devices_count)?;
    for w in &est.warnings {
        eprintln!("warning: {w}");
    }
    let rec = json!({
        "lambda": est.lambda,
        "histogram": hist,
        "p_window": p_window,
        "window_nm": imp.window_nm,
        "devices_count": imp.devices_count,
        "usable": usable,
        "usable_rounded": usable.round(),
        "profile": imp.profile,
    });
    Ok(vec![Output::record("yield", &rec)?].into())
}

pub fn phc_bands(cfg: &LoadedConfig, a: &PhcArgs) -> Result<Run> {
    let phc = &cfg.config.phc;
    let pw = a.planewaves.unwrap_or(phc.planewave_count);
    let nb = a.bands.unwrap_or(phc.band_count);
    let path = k_path(a.k_per_segment.unwrap_or(phc.k_per_segment_count))?;
    let diag = tm_bands(&phc.lattice, &path, pw, nb)?;
    let mut cols = vec!["k_index".to_string(), "k_label".to_string()];
    cols.extend((1..=nb).map(|n| format!("band{n}")));
    let mut t = Table::new(&cols);
    for (i, (kp, bands)) in diag.k_path.iter().zip(&diag.bands).enumerate() {
        let mut row: Vec<Cell> = vec![i.into(), kp.label.clone().into()];
        row.extend(bands.iter().map(|&f| Cell::Num(f)));
        t.push(row)?;
    }
    let mut gaps = serde_json::Map::new();
    gaps.insert("complete".into(), serde_json::to_value(find_gaps(&diag, None)?).unwrap_or_default());
    for seg in SEGMENT_LABELS {
        gaps.insert(seg.into(), serde_json::to_value(find_gaps(&diag, Some(seg))?).unwrap_or_default());
    }
    gaps.insert("planewave_count".into(), json!(diag.n_planewaves));
    gaps.insert("frequency_unit".into(), json!("a/lambda"));
    let mut out = vec![Output::table("phc_bands", t), Output::record("phc_gaps", &gaps)?];
    if a.gaps {
        out.reverse();
    }
    Ok(out.into())
}

pub fn design(cfg: &LoadedConfig, a: &DesignArgs) -> Result<Run> {
    let phc = &cfg.config.phc;
    let rr = phc.lattice.hole_radius_ratio;
    let mut lat = Table::new(&["normalized_frequency", "lattice_constant_nm", "hole_diameter_nm"]);
    for &f in &a.freqs {
        let d = lattice_from_zpl(phc.zpl_nm, f, rr)?;
        lat.push(vec![d.normalized_frequency.into(), d.lattice_constant_nm.into(), d.hole_diameter_nm.into()])?;
    }
    let mut beams = Table::new(&["order", "width_nm", "center_antinode"]);
    for b in nanobeam_widths(phc.zpl_nm, a.orders.unwrap_or(phc.nanobeam_orders_count))? {
        beams.push(vec![u64::from(b.order).into(), b.width_nm.into(), b.center_antinode.into()])?;
    }
    Ok(vec![Output::table("design_lattice", lat), Output::table("design_nanobeam", beams)].into())
}

pub fn reproduce_cmd(cfg: &LoadedConfig, a: &ReproduceArgs, seed: u64) -> Result<Run> {
    let opts = ReproduceOptions {
        seed,
        rows: a.rows.clone(),
        base_dir: cfg.base_dir.clone(),
    };
    let rep = reproduce(&cfg.config, &opts)?;
    for r in rep.failures() {
        eprintln!("FAIL {}: computed {} vs {} ({})", r.claim, r.computed, r.reference, r.tolerance);
    }
    Ok(Run {
        failed: !rep.all_pass(),
        outputs: vec![Output::table("reproduce", rep.table())],
    })
}
