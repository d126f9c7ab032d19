//! Runs a resolved configuration and turns the results into tables.

use rayon::prelude::*;

use nvscope::bath::{decoupling_signal, sample_bath};
use nvscope::constants::{field_for_larmor, Species, GAMMA_P31};
use nvscope::dynamics::linspace;
use nvscope::inversion::{
    find_dips, invert_pair_geometry, Dip, NineDeltas, PairDirection, PairGeometry,
};
use nvscope::model::{unit_vector, H3po4Geometry, NC60Geometry};
use nvscope::protocols::{
    direction_scan, estimate_position_multi, grid, label_resonances, map_maximum,
    orthogonal_traces, pair_splitting, qnd_repeat, qnd_scan, radical_monitor, radical_scan,
    run_pair_geometry, slope_metrics, trace_times, DirectionGrid, PositionScenario, QndConfig,
};
use nvscope::{DirectionMap, FieldConfig, ResonanceScan, SpinSite};

use crate::config::{
    BathSection, PairSection, PositionSection, Protocol, QndSection, ResolvedConfig,
};
use crate::error::CliError;
use crate::output::{col, file_label, Cell, ParsedCsv, Table};

/// Minimum depth of a reported dip below the scan baseline.
pub const DIP_THRESHOLD: f64 = 0.02;

/// Tables and warnings from one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub warnings: Vec<String>,
}

/// Names of the tables a run of `cfg` writes, in order.
pub fn planned_tables(cfg: &ResolvedConfig) -> Vec<String> {
    let c = &cfg.config;
    let names: Vec<String> = match c.protocol {
        Protocol::PositionScan => vec!["direction_map".into(), "direction_summary".into()],
        Protocol::PositionEstimate => vec![
            "direction_map".into(),
            "orthogonal_traces".into(),
            "position_estimate".into(),
        ],
        Protocol::Qnd => {
            let q = c.qnd.as_ref().expect("resolved");
            let mut v: Vec<String> = q.nuclear_states.iter().map(|&m| qnd_scan_name(m)).collect();
            v.extend(["qnd_dips", "qnd_monitor", "qnd_summary"].map(String::from));
            v
        }
        Protocol::Pair => {
            let mut v: Vec<String> = PairDirection::ALL
                .iter()
                .map(|d| pair_scan_name(*d))
                .collect();
            v.extend(["pair_dips", "pair_deltas", "pair_geometry"].map(String::from));
            v
        }
        Protocol::Labels => vec![
            "labels_scan".into(),
            "labels_dips".into(),
            "labels_summary".into(),
        ],
        Protocol::Radical => vec![
            "radical_scan".into(),
            "radical_dips".into(),
            "radical_monitor".into(),
            "radical_summary".into(),
        ],
        Protocol::BathDecoupling => vec![
            "bath_sites".into(),
            "bath_decoupling".into(),
            "bath_summary".into(),
        ],
    };
    names
}

fn qnd_scan_name(m: i32) -> String {
    match m {
        1 => "qnd_scan_mi_plus1".into(),
        -1 => "qnd_scan_mi_minus1".into(),
        m => format!("qnd_scan_mi_{m}"),
    }
}

fn pair_scan_name(d: PairDirection) -> String {
    format!("pair_scan_{}", file_label(d.label()))
}

pub fn run(cfg: &ResolvedConfig) -> Result<RunOutput, CliError> {
    let c = &cfg.config;
    let section = || CliError::Schema(format!("missing [{}] section", c.protocol.section()));
    let out = match c.protocol {
        Protocol::PositionScan => position_scan(c.position.as_ref().ok_or_else(section)?)?,
        Protocol::PositionEstimate => position_estimate(c.position.as_ref().ok_or_else(section)?)?,
        Protocol::Qnd => qnd(c.qnd.as_ref().ok_or_else(section)?)?,
        Protocol::Pair => pair(c.pair.as_ref().ok_or_else(section)?)?,
        Protocol::Labels => labels(&c.labels.as_ref().ok_or_else(section)?.to_core())?,
        Protocol::Radical => radical(c.radical.as_ref().ok_or_else(section)?)?,
        Protocol::BathDecoupling => bath(c.bath.as_ref().ok_or_else(section)?, c.seed)?,
    };
    debug_assert_eq!(
        out.tables
            .iter()
            .map(|t| t.name.clone())
            .collect::<Vec<_>>(),
        planned_tables(cfg)
    );
    Ok(out)
}

fn summary_table(name: &str) -> Table {
    Table::new(
        name,
        "summary",
        vec![
            col("quantity", "-", "name of the reported quantity"),
            col("value", "see unit", "value; empty when not determined"),
            col("unit", "-", "unit of value"),
        ],
    )
}

fn summary_row(t: &mut Table, quantity: &str, value: impl Into<Cell>, unit: &str) {
    t.push(vec![Cell::from(quantity), value.into(), Cell::from(unit)]);
}

fn scan_table(name: &str, scan: &ResonanceScan, description: &str) -> Table {
    let mut t = Table::new(
        name,
        "scan",
        vec![
            col("omega_nv_khz", "kHz", "NV Rabi frequency"),
            col("S", "1", description),
        ],
    )
    .with_meta("readout_ms", scan.readout_ms);
    for (x, y) in scan.grid.iter().zip(&scan.values) {
        t.push(vec![Cell::Num(*x), Cell::Num(*y)]);
    }
    t
}

/// Dips table with optional leading label column.
fn dips_table(name: &str, label: Option<&str>) -> Table {
    let mut cols = Vec::new();
    if let Some(l) = label {
        cols.push(col(l, "-", "scan the dip belongs to"));
    }
    cols.extend([
        col("center_khz", "kHz", "refined dip center"),
        col("depth", "1", "baseline minus minimum"),
        col("width_khz", "kHz", "full width at half depth"),
        col(
            "unresolved",
            "-",
            "dip is wider than expected or merges with a neighbour",
        ),
    ]);
    Table::new(name, "dips", cols)
}

fn dip_row(label: Option<&str>, d: &Dip) -> Vec<Cell> {
    let mut row = Vec::new();
    if let Some(l) = label {
        row.push(Cell::from(l));
    }
    row.extend([
        Cell::Num(d.center),
        Cell::Num(d.depth),
        Cell::Num(d.width),
        Cell::Bool(d.unresolved),
    ]);
    row
}

fn scenario(s: &PositionSection) -> Result<PositionScenario, CliError> {
    let geometry = H3po4Geometry::from_hyperfine(
        s.distance_nm,
        s.theta0_deg.to_radians(),
        s.phi0_deg.to_radians(),
        s.ph_distance_nm,
    )?;
    Ok(PositionScenario {
        geometry,
        field_gauss: field_for_larmor(Species::P31, s.phosphorus_larmor_khz),
        rf_khz: s.rf_khz,
        include_back_action: s.include_back_action,
        with_protons: s.with_protons,
    })
}

fn direction_map(
    s: &PositionSection,
) -> Result<(PositionScenario, DirectionGrid, DirectionMap), CliError> {
    let scn = scenario(s)?;
    let grid = DirectionGrid::new(s.n_theta, s.n_phi)?;
    let map = direction_scan(&scn, &grid, s.readout_ms)?;
    Ok((scn, grid, map))
}

fn map_table(map: &DirectionMap) -> Table {
    let mut t = Table::new(
        "direction_map",
        "direction-map",
        vec![
            col("theta_deg", "deg", "polar angle of the field"),
            col("phi_deg", "deg", "azimuth of the field"),
            col("S", "1", "NV survival in |+x>"),
        ],
    )
    .with_meta("readout_ms", map.readout_ms);
    for (th, row) in map.thetas.iter().zip(&map.values) {
        for (ph, v) in map.phis.iter().zip(row) {
            t.push(vec![
                Cell::Num(th.to_degrees()),
                Cell::Num(ph.to_degrees()),
                Cell::Num(*v),
            ]);
        }
    }
    t
}

fn position_scan(s: &PositionSection) -> Result<RunOutput, CliError> {
    let (_, grid, map) = direction_map(s)?;
    let (th, ph) = map_maximum(&map);
    let (dth, dph) = grid.cell();
    let mut sum = summary_table("direction_summary");
    summary_row(&mut sum, "max_theta_deg", th.to_degrees(), "deg");
    summary_row(&mut sum, "max_phi_deg", ph.to_degrees(), "deg");
    summary_row(&mut sum, "cell_theta_deg", dth.to_degrees(), "deg");
    summary_row(&mut sum, "cell_phi_deg", dph.to_degrees(), "deg");
    summary_row(&mut sum, "S_max", map.max(), "1");
    summary_row(&mut sum, "S_mean", map.mean(), "1");
    Ok(RunOutput {
        tables: vec![map_table(&map), sum],
        warnings: Vec::new(),
    })
}

fn position_estimate(s: &PositionSection) -> Result<RunOutput, CliError> {
    let (scn, grid, map) = direction_map(s)?;
    let (th, ph) = map_maximum(&map);
    let times = trace_times(s.trace_span_ms, s.trace_points);
    let traces = orthogonal_traces(&scn, &unit_vector(th, ph), &times, s.orthogonal_directions)?;
    let est = estimate_position_multi(&map, &traces, GAMMA_P31, 4.0 * scn.g_n())?;

    let mut tr = Table::new(
        "orthogonal_traces",
        "trace",
        vec![
            col(
                "psi_deg",
                "deg",
                "field angle within the plane orthogonal to the hyperfine vector",
            ),
            col("t_ms", "ms", "readout time"),
            col("S", "1", "NV survival in |+x>"),
        ],
    );
    for (k, trace) in traces.iter().enumerate() {
        let psi = 180.0 * k as f64 / traces.len() as f64;
        for (t, v) in trace.times.iter().zip(&trace.values) {
            tr.push(vec![Cell::Num(psi), Cell::Num(*t), Cell::Num(*v)]);
        }
    }

    let (dth, dph) = grid.cell();
    let mut sum = summary_table("position_estimate");
    summary_row(&mut sum, "theta0_deg", est.theta0.to_degrees(), "deg");
    summary_row(&mut sum, "phi0_deg", est.phi0.to_degrees(), "deg");
    summary_row(&mut sum, "cell_theta_deg", dth.to_degrees(), "deg");
    summary_row(&mut sum, "cell_phi_deg", dph.to_degrees(), "deg");
    summary_row(&mut sum, "j_est_khz", est.j_est, "kHz");
    summary_row(&mut sum, "r_est_nm", est.r_est, "nm");
    summary_row(&mut sum, "r_hat_x", est.r_hat.x, "1");
    summary_row(&mut sum, "r_hat_y", est.r_hat.y, "1");
    summary_row(&mut sum, "r_hat_z", est.r_hat.z, "1");
    summary_row(&mut sum, "fit_rms", est.fit_rms, "1");
    summary_row(&mut sum, "low_confidence", est.low_confidence, "-");

    let mut warnings = Vec::new();
    if est.low_confidence {
        warnings.push(format!(
            "flip-flop rate fit residual {:.4} exceeds tolerance; distance estimate is low confidence",
            est.fit_rms
        ));
    }
    Ok(RunOutput {
        tables: vec![map_table(&map), tr, sum],
        warnings,
    })
}

fn qnd(s: &QndSection) -> Result<RunOutput, CliError> {
    let cfg = QndConfig {
        field_gauss: s.field_gauss,
        geometry: NC60Geometry {
            distance_nm: s.distance_nm,
            polar: s.polar_deg.to_radians(),
            azimuth: s.azimuth_deg.to_radians(),
            hyperfine_khz: s.hyperfine_khz,
            quadrupole_khz: s.quadrupole_khz,
            secular_hyperfine: s.secular_hyperfine,
        },
    };
    let t_ms = s.readout_us * 1e-3;
    let g = grid(s.scan_start_khz, s.scan_stop_khz, s.scan_step_khz)?;
    let mut tables = Vec::new();
    let mut dips_t = dips_table("qnd_dips", Some("m_i"));
    let mut warnings = Vec::new();
    let mut monitor_at = s.monitor_omega_nv_khz;
    for (k, &m) in s.nuclear_states.iter().enumerate() {
        let scan = qnd_scan(&cfg, m, &g, t_ms)?;
        let dips = find_dips(&scan, DIP_THRESHOLD)?;
        let label = m.to_string();
        for d in &dips {
            dips_t.push(dip_row(Some(&label), d));
        }
        if k == 0 && monitor_at.is_none() {
            monitor_at = Some(
                match dips.iter().max_by(|a, b| a.depth.total_cmp(&b.depth)) {
                    Some(d) => d.center,
                    None => {
                        warnings.push(format!(
                            "no dip in the m_I = {m} scan; monitoring at the scan minimum"
                        ));
                        let i = (0..scan.values.len())
                            .min_by(|&a, &b| scan.values[a].total_cmp(&scan.values[b]))
                            .unwrap_or(0);
                        scan.grid[i]
                    }
                },
            );
        }
        if dips.iter().any(|d| d.unresolved) {
            warnings.push(format!("m_I = {m} scan has unresolved dips"));
        }
        let t = scan_table(&qnd_scan_name(m), &scan, "dark-state population").with_meta("m_i", m);
        tables.push(t);
    }
    tables.push(dips_t);

    let m0 = s.nuclear_states[0];
    let omega = monitor_at.expect("set for the first state");
    let (sig, fid) = qnd_repeat(&cfg, m0, omega, s.readouts, t_ms, s.samples_per_readout)?;
    let mut mon = Table::new(
        "qnd_monitor",
        "trace",
        vec![
            col("t_ms", "ms", "time since the first readout started"),
            col("S", "1", "dark-state population"),
            col("fidelity", "1", "population of the prepared nitrogen state"),
        ],
    )
    .with_meta("m_i", m0)
    .with_meta("omega_nv_khz", omega);
    for ((t, a), b) in sig.times.iter().zip(&sig.values).zip(&fid.values) {
        mon.push(vec![Cell::Num(*t), Cell::Num(*a), Cell::Num(*b)]);
    }
    tables.push(mon);

    let mut sum = summary_table("qnd_summary");
    summary_row(&mut sum, "monitor_m_i", m0 as f64, "1");
    summary_row(&mut sum, "monitor_omega_nv_khz", omega, "kHz");
    summary_row(&mut sum, "fidelity_min", fid.min(), "1");
    summary_row(&mut sum, "fidelity_final", fid.values.last().copied(), "1");
    tables.push(sum);
    Ok(RunOutput { tables, warnings })
}

fn pair(s: &PairSection) -> Result<RunOutput, CliError> {
    let core = s.to_core();
    let run = run_pair_geometry(&core)?;
    let mut tables: Vec<Table> = run
        .scans
        .iter()
        .map(|(d, scan)| {
            scan_table(&pair_scan_name(*d), scan, "NV survival in |+x>")
                .with_meta("direction", d.label())
        })
        .collect();
    let unresolved: Vec<PairDirection> = run.unresolved.clone();
    let (dips_t, deltas_t) = pair_dip_tables(&run.dips, &run.measured, &unresolved);
    tables.push(dips_t);
    tables.push(deltas_t);
    tables.push(geometry_table(&run.geometry, s.species));
    Ok(RunOutput {
        tables,
        warnings: pair_warnings(&unresolved),
    })
}

fn pair_warnings(unresolved: &[PairDirection]) -> Vec<String> {
    unresolved
        .iter()
        .map(|d| {
            format!(
                "direction {}: the two dips are not resolved and the splitting is unreliable",
                d.label()
            )
        })
        .collect()
}

fn pair_dip_tables(
    dips: &[(PairDirection, Vec<Dip>)],
    measured: &NineDeltas,
    unresolved: &[PairDirection],
) -> (Table, Table) {
    let mut dips_t = dips_table("pair_dips", Some("direction"));
    for (d, ds) in dips {
        for dip in ds {
            dips_t.push(dip_row(Some(d.label()), dip));
        }
    }
    let mut deltas = Table::new(
        "pair_deltas",
        "summary",
        vec![
            col("direction", "-", "field direction"),
            col(
                "delta_khz",
                "kHz",
                "splitting between the two pair resonances",
            ),
            col("unresolved", "-", "dips could not be separated"),
        ],
    );
    for d in PairDirection::ALL {
        deltas.push(vec![
            Cell::from(d.label()),
            Cell::Num(measured.get(d)),
            Cell::Bool(unresolved.contains(&d)),
        ]);
    }
    (dips_t, deltas)
}

fn geometry_table(g: &PairGeometry, species: Species) -> Table {
    let (th, ph) = g.angles();
    let gamma = species.gamma();
    let mut t = summary_table("pair_geometry");
    summary_row(&mut t, "g_khz", g.g, "kHz");
    summary_row(&mut t, "distance_nm", g.distance(gamma, gamma).ok(), "nm");
    summary_row(&mut t, "r_hat_x", g.r_hat.x, "1");
    summary_row(&mut t, "r_hat_y", g.r_hat.y, "1");
    summary_row(&mut t, "r_hat_z", g.r_hat.z, "1");
    summary_row(&mut t, "theta_deg", th.to_degrees(), "deg");
    summary_row(&mut t, "phi_deg", ph.to_degrees(), "deg");
    summary_row(&mut t, "norm_residual", g.norm_residual, "1");
    summary_row(&mut t, "fit_residual", g.residual, "1");
    t
}

fn labels(cfg: &nvscope::protocols::LabelConfig) -> Result<RunOutput, CliError> {
    let g = cfg.scan_grid()?;
    let r = label_resonances(cfg, &g)?;
    let scan = scan_table("labels_scan", &r.scan, "NV survival in |+x>");
    let mut dips = dips_table("labels_dips", None);
    for d in &r.dips {
        dips.push(dip_row(None, d));
    }
    let mut sum = summary_table("labels_summary");
    let g_khz = cfg.g()?;
    summary_row(&mut sum, "g_khz", g_khz, "kHz");
    summary_row(
        &mut sum,
        "g12_khz",
        g_khz * (1.0 - 3.0 * cfg.cos_theta * cfg.cos_theta),
        "kHz",
    );
    summary_row(&mut sum, "delta1_khz", r.delta1, "kHz");
    summary_row(&mut sum, "delta2_khz", r.delta2, "kHz");
    summary_row(&mut sum, "scan_step_khz", r.scan.step(), "kHz");
    let mut warnings = Vec::new();
    if r.delta1.is_none() {
        warnings.push(
            "fewer than two label resonances found; the main splitting is undetermined".into(),
        );
    }
    if r.dips.iter().any(|d| d.unresolved) {
        warnings.push("label scan has unresolved dips".into());
    }
    Ok(RunOutput {
        tables: vec![scan, dips, sum],
        warnings,
    })
}

fn radical(s: &crate::config::RadicalSection) -> Result<RunOutput, CliError> {
    let cfg = s.to_core();
    let g = cfg.scan_grid()?;
    let scan = radical_scan(&cfg, &g)?;
    let omega3 = cfg.omega3()?;
    let found = find_dips(&scan, DIP_THRESHOLD)?;
    let mut dips = dips_table("radical_dips", None);
    for d in &found {
        dips.push(dip_row(None, d));
    }
    let times = linspace(0.0, s.monitor_span_us * 1e-3, s.monitor_points);
    let (signal, separated) = radical_monitor(&cfg, &times)?;
    let mut mon = Table::new(
        "radical_monitor",
        "trace",
        vec![
            col("t_ms", "ms", "time under the drive"),
            col("S", "1", "NV population in |-x>"),
            col("separated", "1", "charge-separated population"),
        ],
    )
    .with_meta("omega_nv_khz", omega3);
    for ((t, a), b) in signal
        .times
        .iter()
        .zip(&signal.values)
        .zip(&separated.values)
    {
        mon.push(vec![Cell::Num(*t), Cell::Num(*a), Cell::Num(*b)]);
    }

    let mut warnings = Vec::new();
    let nearest = found.iter().min_by(|a, b| {
        (a.center - omega3)
            .abs()
            .total_cmp(&(b.center - omega3).abs())
    });
    if nearest.is_none() {
        warnings.push("no dip found in the radical scan".into());
    }
    let slopes = match slope_metrics(&signal, s.k_per_us * 1e3) {
        Ok(v) => Some(v),
        Err(e) => {
            warnings.push(format!("slope metrics unavailable: {e}"));
            None
        }
    };
    let mut sum = summary_table("radical_summary");
    summary_row(&mut sum, "omega3_khz", omega3, "kHz");
    summary_row(&mut sum, "dip_center_khz", nearest.map(|d| d.center), "kHz");
    summary_row(&mut sum, "dip_depth", nearest.map(|d| d.depth), "1");
    summary_row(
        &mut sum,
        "initial_slope_per_ms",
        slopes.map(|s| s.0),
        "1/ms",
    );
    summary_row(&mut sum, "late_slope_per_ms", slopes.map(|s| s.1), "1/ms");
    Ok(RunOutput {
        tables: vec![
            scan_table("radical_scan", &scan, "NV population in |-x>"),
            dips,
            mon,
            sum,
        ],
        warnings,
    })
}

fn sites_table(sites: &[SpinSite]) -> Table {
    let mut t = Table::new(
        "bath_sites",
        "sites",
        vec![
            col("index", "1", "spin index"),
            col("species", "-", "isotope"),
            col("x_nm", "nm", "position relative to the NV"),
            col("y_nm", "nm", "position relative to the NV"),
            col("z_nm", "nm", "position along the NV axis"),
            col("r_nm", "nm", "distance from the NV"),
        ],
    );
    for (i, s) in sites.iter().enumerate() {
        let p = s.position;
        t.push(vec![
            Cell::Int(i as i64),
            Cell::Text(
                s.species
                    .map_or_else(|| s.label.clone(), |sp| sp.name().to_string()),
            ),
            Cell::Num(p.x),
            Cell::Num(p.y),
            Cell::Num(p.z),
            Cell::Num(p.norm()),
        ]);
    }
    t
}

/// Samples the bath of `s` without running any dynamics.
pub fn bath_sites(s: &BathSection, seed: u64) -> Result<Table, CliError> {
    Ok(sites_table(&sample_bath(&s.to_core(seed))?))
}

fn bath(s: &BathSection, seed: u64) -> Result<RunOutput, CliError> {
    let sites = sample_bath(&s.to_core(seed))?;
    let times = linspace(0.0, s.span_ms, s.points);
    let field = FieldConfig::new(s.field_gauss, 0.0, 0.0);
    let (driven, free) = decoupling_signal(&sites, s.omega_khz, &field, &times)?;
    let mut t = Table::new(
        "bath_decoupling",
        "trace",
        vec![
            col("t_ms", "ms", "evolution time"),
            col("S_driven", "1", "NV survival in |+x> under the drive"),
            col("S_undriven", "1", "NV survival in |+x> without drive"),
        ],
    )
    .with_meta("omega_nv_khz", s.omega_khz);
    for ((t_ms, a), b) in times.iter().zip(&driven.values).zip(&free.values) {
        t.push(vec![Cell::Num(*t_ms), Cell::Num(*a), Cell::Num(*b)]);
    }
    let mut sum = summary_table("bath_summary");
    summary_row(&mut sum, "spins", sites.len() as f64, "1");
    summary_row(&mut sum, "driven_min", driven.min(), "1");
    summary_row(&mut sum, "undriven_min", free.min(), "1");
    Ok(RunOutput {
        tables: vec![sites_table(&sites), t, sum],
        warnings: Vec::new(),
    })
}

/// Runs `base` once per axis value, in parallel, and merges each table
/// across points with a leading axis column. Output order follows `values`.
pub fn sweep(base: &ResolvedConfig, axis: &str, values: &[f64]) -> Result<RunOutput, CliError> {
    if values.is_empty() {
        return Err(CliError::Schema("sweep needs at least one value".into()));
    }
    let configs = values
        .iter()
        .map(|&v| base.with_value(axis, v))
        .collect::<Result<Vec<_>, _>>()?;
    let outputs = configs.par_iter().map(run).collect::<Result<Vec<_>, _>>()?;
    let mut merged = RunOutput::default();
    for (k, template) in outputs[0].tables.iter().enumerate() {
        let mut cols = vec![col(
            axis,
            "config",
            "value of the swept configuration field",
        )];
        cols.extend(template.columns.iter().cloned());
        let mut t = Table::new(format!("sweep_{}", template.name), &template.kind, cols)
            .with_meta("sweep_axis", axis)
            .with_meta("sweep_values", join_values(values));
        for (v, out) in values.iter().zip(&outputs) {
            let table = out
                .tables
                .get(k)
                .filter(|t| t.name == template.name)
                .ok_or_else(|| {
                    CliError::Compute(format!(
                        "sweep point {axis} = {v} produced a different set of tables"
                    ))
                })?;
            for row in &table.rows {
                let mut r = vec![Cell::Num(*v)];
                r.extend(row.iter().cloned());
                t.push(r);
            }
        }
        merged.tables.push(t);
    }
    for (v, out) in values.iter().zip(&outputs) {
        merged
            .warnings
            .extend(out.warnings.iter().map(|w| format!("{axis} = {v}: {w}")));
    }
    Ok(merged)
}

fn join_values(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Reassembles the pair geometry from nine scan files written by a pair run.
/// Returns the configuration embedded in the inputs and the derived tables.
pub fn invert(files: &[ParsedCsv]) -> Result<(ResolvedConfig, RunOutput), CliError> {
    let first = files
        .first()
        .ok_or_else(|| CliError::Schema("invert needs the nine pair scan files".into()))?;
    let cfg_text = first
        .config
        .as_deref()
        .ok_or_else(|| CliError::Schema("pair scan file carries no embedded config".into()))?;
    let cfg = ResolvedConfig::from_text(cfg_text)?;
    let species = cfg
        .config
        .pair
        .as_ref()
        .map(|p| p.species)
        .ok_or_else(|| CliError::Schema("embedded config is not a pair experiment".into()))?;
    let mut scans: Vec<Option<ResonanceScan>> = vec![None; PairDirection::ALL.len()];
    for f in files {
        if f.meta("config_sha256") != first.meta("config_sha256") {
            return Err(CliError::Schema(
                "pair scan files come from different configurations".into(),
            ));
        }
        let label = f
            .meta("direction")
            .ok_or_else(|| CliError::Schema("pair scan file lacks a direction".into()))?;
        let dir = PairDirection::from_label(label)
            .ok_or_else(|| CliError::Schema(format!("unknown pair direction {label:?}")))?;
        let readout: f64 = f
            .meta("readout_ms")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| CliError::Schema("pair scan file lacks readout_ms".into()))?;
        let (xi, yi) = match (f.column("omega_nv_khz"), f.column("S")) {
            (Some(x), Some(y)) => (x, y),
            _ => {
                return Err(CliError::Schema(
                    "pair scan file needs omega_nv_khz and S columns".into(),
                ))
            }
        };
        let scan = ResonanceScan::new("omega_nv", "kHz", f.numbers(xi)?, f.numbers(yi)?, readout)
            .map_err(|e| CliError::Schema(e.to_string()))?;
        let slot = &mut scans[dir.index()];
        if slot.is_some() {
            return Err(CliError::Schema(format!("direction {label} given twice")));
        }
        *slot = Some(scan);
    }
    let mut deltas = [0.0; 9];
    let mut dips = Vec::new();
    let mut unresolved = Vec::new();
    for d in PairDirection::ALL {
        let scan = scans[d.index()]
            .as_ref()
            .ok_or_else(|| CliError::Schema(format!("missing scan for direction {}", d.label())))?;
        let (delta, ds, merged) = pair_splitting(scan);
        deltas[d.index()] = delta;
        if merged {
            unresolved.push(d);
        }
        dips.push((d, ds));
    }
    let measured = NineDeltas(deltas);
    let geometry = invert_pair_geometry(&measured)?;
    let (dips_t, deltas_t) = pair_dip_tables(&dips, &measured, &unresolved);
    let out = RunOutput {
        tables: vec![dips_t, deltas_t, geometry_table(&geometry, species)],
        warnings: pair_warnings(&unresolved),
    };
    Ok((cfg, out))
}
