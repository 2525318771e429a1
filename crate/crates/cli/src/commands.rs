//! Subcommand implementations: each consumes the resolved configuration,
//! runs the corresponding core pipeline, and emits deterministic CSV/JSON
//! artifacts through the manifest builder.

use pulsegate_core::calibrate::{self, ProtocolOptions, Scenario};
use pulsegate_core::dynamics::PropagationSettings;
use pulsegate_core::gate;
use pulsegate_core::perturbation::{self, PerturbationContext};
use pulsegate_core::pulse::{DriveSchedule, DriveSpec, Envelope};
use pulsegate_core::spectrum;
use pulsegate_core::units;
use pulsegate_core::{CoreError, FockLabel};

use crate::config::{ConfigError, ExperimentConfig};
use crate::manifest::ManifestBuilder;

pub enum CliError {
    Config(String),
    Core(CoreError),
    Io(std::io::Error),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

pub struct RunContext {
    pub config: ExperimentConfig,
    pub scenario: Scenario,
    pub settings: PropagationSettings,
    pub scan: bool,
}

fn fmt_f64(v: f64) -> String {
    // Shortest round-trip representation: bit-identical across runs.
    format!("{v}")
}

/// ZZ landscape sweep over the two qubit frequencies.
pub fn zz_map(ctx: &RunContext, m: &mut ManifestBuilder) -> Result<(), CliError> {
    let sweep = ctx
        .config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("zz-map needs a [sweep] section".into()))?;
    if sweep.grid[0] == 0
        || sweep.grid[1] == 0
        || sweep.omega1_ghz[1] < sweep.omega1_ghz[0]
        || sweep.omega2_ghz[1] < sweep.omega2_ghz[0]
    {
        return Err(CliError::Config("empty sweep range".into()));
    }
    let cells = spectrum::zz_sweep(
        &ctx.scenario.device,
        (sweep.omega1_ghz[0], sweep.omega1_ghz[1]),
        (sweep.omega2_ghz[0], sweep.omega2_ghz[1]),
        (sweep.grid[0], sweep.grid[1]),
    )
    .map_err(|e| CliError::Core(e.in_stage("zz-sweep")))?;
    m.stage("zz-sweep");
    let mut csv = String::from("omega1_GHz,omega2_GHz,zeta_kHz,log10_abs_zeta\n");
    for c in &cells {
        let (zeta, log10) = match c.zeta_khz {
            Some(z) if z != 0.0 => (fmt_f64(z), fmt_f64(z.abs().log10())),
            Some(z) => (fmt_f64(z), String::new()),
            None => (String::new(), String::new()),
        };
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(c.omega1_ghz),
            fmt_f64(c.omega2_ghz),
            zeta,
            log10
        ));
    }
    m.write_file("zz_map.csv", csv.as_bytes())?;
    m.stage("emit");
    Ok(())
}

/// Effective-coupling sweep over the coupler anharmonicity.
pub fn j12_scan(ctx: &RunContext, m: &mut ManifestBuilder) -> Result<(), CliError> {
    let section = ctx
        .config
        .j12
        .as_ref()
        .ok_or_else(|| CliError::Config("j12-scan needs a [j12] section".into()))?;
    if section.points < 2 {
        return Err(CliError::Config("j12 sweep needs at least 2 points".into()));
    }
    let sc = &ctx.scenario;
    let base_ctx = sc.context()?;
    let alpha0_ghz = sc.device.modes[sc.coupler].anharmonicity;
    let paths = perturbation::canonical_paths();
    let header = if section.dynamics {
        "alpha_c_MHz,J_closed_MHz,J_pathsum_MHz,J_dynamics_MHz\n"
    } else {
        "alpha_c_MHz,J_closed_MHz,J_pathsum_MHz\n"
    };
    let mut csv = String::from(header);
    for k in 0..section.points {
        let alpha_mhz = section.alpha_c_mhz[0]
            + (section.alpha_c_mhz[1] - section.alpha_c_mhz[0]) * k as f64
                / (section.points - 1) as f64;
        let mut pctx = base_ctx.clone();
        pctx.alpha_c = units::mhz(alpha_mhz);
        let j_closed = perturbation::closed_form_j12(&pctx)
            .map_err(|e| CliError::Core(e.in_stage("closed-form")))?;
        let j_path = perturbation::path_sum_j(&pctx, &paths)
            .map_err(|e| CliError::Core(e.in_stage("path-sum")))?;
        if section.dynamics {
            let j_dyn = dynamics_point(sc, alpha_mhz * 1e-3, alpha0_ghz, &ctx.settings)?;
            csv.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(alpha_mhz),
                fmt_f64(units::to_mhz(j_closed)),
                fmt_f64(units::to_mhz(j_path)),
                j_dyn.map(|j| fmt_f64(units::to_mhz(j))).unwrap_or_default()
            ));
        } else {
            csv.push_str(&format!(
                "{},{},{}\n",
                fmt_f64(alpha_mhz),
                fmt_f64(units::to_mhz(j_closed)),
                fmt_f64(units::to_mhz(j_path))
            ));
        }
    }
    m.stage("j12-sweep");
    m.write_file("j12_scan.csv", csv.as_bytes())?;
    m.stage("emit");
    Ok(())
}

/// Dynamics extraction at a shifted coupler anharmonicity; both tone
/// frequencies follow the first-order shift of the drive condition.
fn dynamics_point(
    sc: &Scenario,
    alpha_ghz: f64,
    alpha0_ghz: f64,
    settings: &PropagationSettings,
) -> Result<Option<f64>, CliError> {
    let mut scenario = sc.clone();
    let shift = alpha_ghz - alpha0_ghz;
    scenario.device.modes[sc.coupler].anharmonicity = alpha_ghz;
    scenario.drive1 = sc.drive1 + shift;
    scenario.drive2 = sc.drive2 + shift;
    let j_est = match scenario.j_estimate() {
        Ok(j) if j > 1e-8 => j,
        _ => return Ok(None),
    };
    let horizon = 1.2 * std::f64::consts::FRAC_PI_2 / j_est;
    let sched = scenario.plateau_schedule(scenario.drive2, horizon)?;
    match perturbation::extract_j_from_dynamics(
        &scenario.device,
        &sched,
        scenario.pair,
        horizon,
        settings,
    ) {
        Ok(j) => Ok(Some(j)),
        Err(CoreError::ExtractionFailure(_)) => Ok(None),
        Err(e) => Err(CliError::Core(e.in_stage("dynamics-extraction"))),
    }
}

/// Full gate protocol: JSON summary plus one trajectory CSV per
/// computational initial state.
pub fn gate_report(ctx: &RunContext, m: &mut ManifestBuilder) -> Result<(), CliError> {
    let options = ProtocolOptions {
        scan: ctx.scan,
        settings: ctx.settings.clone(),
        ..Default::default()
    };
    let (report, trajectories) = calibrate::run_gate_protocol(&ctx.scenario, &options)?;
    m.stage("protocol");

    let json = serde_json::json!({
        "scenario": report.scenario,
        "fidelity_raw": report.fidelity_raw,
        "fidelity_1q": report.fidelity_1q,
        "fidelity_cond": report.fidelity_cond,
        "theta1_rad": report.theta1_rad,
        "theta2_rad": report.theta2_rad,
        "phi_rad": report.phi_rad,
        "leakage_by_initial_state": report.leakage_by_initial_state
            .iter()
            .map(|(l, v)| serde_json::json!({"state": l, "leakage": v}))
            .collect::<Vec<_>>(),
        "leakage_avg": report.leakage_avg,
        "gate_time_ns": report.gate_time_ns,
    });
    m.write_file(
        "gate_report.json",
        serde_json::to_string_pretty(&json).expect("json").as_bytes(),
    )?;

    // Tracked populations: the four computational states plus the coupler
    // double-excitation leakage family.
    let sc = &ctx.scenario;
    let device = &sc.device;
    let n = device.n_modes();
    let mut tracked: Vec<FockLabel> = gate::computational_labels(device, sc.pair).to_vec();
    for (na, nb) in [(0, 0), (1, 0), (0, 1)] {
        let mut occ = vec![0usize; n];
        occ[sc.pair.0] = na;
        occ[sc.pair.1] = nb;
        occ[sc.coupler] = 2;
        tracked.push(FockLabel::new(occ));
    }
    let initials = ["00", "01", "10", "11"];
    for (traj, init) in trajectories.iter().zip(initials) {
        let mut csv = String::from("t_ns");
        for l in &tracked {
            csv.push_str(&format!(",P{l}"));
        }
        csv.push('\n');
        let pops: Vec<Vec<f64>> = tracked
            .iter()
            .map(|l| traj.population(l))
            .collect::<Result<_, _>>()?;
        for (k, &t) in traj.times.iter().enumerate() {
            csv.push_str(&fmt_f64(t));
            for p in &pops {
                csv.push(',');
                csv.push_str(&fmt_f64(p[k]));
            }
            csv.push('\n');
        }
        m.write_file(&format!("trajectory_init_{init}.csv"), csv.as_bytes())?;
    }
    m.stage("emit");
    Ok(())
}

/// Quasienergy map and ranked leakage candidates.
pub fn floquet_map(ctx: &RunContext, m: &mut ManifestBuilder) -> Result<(), CliError> {
    let sc = &ctx.scenario;
    let section = ctx.config.floquet.as_ref();
    let n_scales = section.and_then(|f| f.scales).unwrap_or(21);
    if n_scales < 2 {
        return Err(CliError::Config("floquet needs at least 2 scales".into()));
    }
    let window = units::mhz(section.and_then(|f| f.window_mhz).unwrap_or(120.0));
    let rtol = section.and_then(|f| f.rtol).unwrap_or(1e-10);
    let tracked = ctx.config.floquet_states(sc.device.n_modes())?;

    let sched = sc.plateau_schedule(sc.drive2, 1e9)?;
    let frame = pulsegate_core::floquet::FloquetFrame::from_schedule(&sched)?;
    let scales: Vec<f64> = (0..n_scales)
        .map(|k| k as f64 / (n_scales - 1) as f64)
        .collect();
    let map = pulsegate_core::floquet::quasienergy_map(&sc.device, &sched, &frame, &scales, rtol)
        .map_err(|e| CliError::Core(e.in_stage("quasienergy-map")))?;
    m.stage("quasienergy-map");

    let mut csv = String::from("scale_s,label,quasienergy_GHz\n");
    for col in &map.columns {
        for bare in 0..sc.device.dim() {
            csv.push_str(&format!(
                "{},{},{}\n",
                fmt_f64(col.scale),
                sc.device.label_of_index(bare),
                fmt_f64(units::to_ghz(col.kappa_by_bare[bare]))
            ));
        }
    }
    m.write_file("quasienergies.csv", csv.as_bytes())?;

    let mut rankings = Vec::new();
    for state in &tracked {
        let ranking = pulsegate_core::floquet::identify_leakage_candidates(
            &map, &sc.device, sc.pair, state, window,
        )
        .map_err(|e| CliError::Core(e.in_stage("leakage-ranking")))?;
        rankings.push(serde_json::json!({
            "state": state.to_string(),
            "warnings": ranking.warnings,
            "candidates": ranking.candidates.iter().take(8).map(|c| serde_json::json!({
                "label": c.label.to_string(),
                "min_gap_MHz": units::to_mhz(c.min_gap),
                "hybridization": c.hybridization,
            })).collect::<Vec<_>>(),
        }));
    }
    m.write_file(
        "leakage_candidates.json",
        serde_json::to_string_pretty(&rankings).expect("json").as_bytes(),
    )?;
    m.stage("emit");
    Ok(())
}

/// Gate error against decoherence times.
pub fn decoherence_sweep(ctx: &RunContext, m: &mut ManifestBuilder) -> Result<(), CliError> {
    let points = ctx.config.decoherence_points()?;
    let results = calibrate::decoherence_sweep(
        &ctx.scenario,
        &points,
        &ctx.settings,
        &ctx.config.lindblad_settings(),
    )?;
    m.stage("lindblad-sweep");
    let mut csv = String::from("T1_us,Tphi_us,gate_error\n");
    for r in &results {
        csv.push_str(&format!(
            "{},{},{}\n",
            r.t1_us.map(fmt_f64).unwrap_or_default(),
            r.tphi_us.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.gate_error)
        ));
    }
    m.write_file("decoherence_sweep.csv", csv.as_bytes())?;
    m.stage("emit");
    Ok(())
}

/// Second-tone frequency scan.
pub fn calibrate_cmd(ctx: &RunContext, m: &mut ManifestBuilder) -> Result<(), CliError> {
    let sc = &ctx.scenario;
    let section = ctx.config.calibrate.as_ref();
    let center = section.and_then(|c| c.center_ghz).unwrap_or(sc.drive2);
    let halfwidth = section.and_then(|c| c.halfwidth_mhz).unwrap_or(8.0) * 1e-3;
    let points = section.and_then(|c| c.points).unwrap_or(17);
    let scan = calibrate::scan_drive_frequency(sc, center, halfwidth, points, &ctx.settings)?;
    m.stage("frequency-scan");
    let json = serde_json::json!({
        "scenario": sc.name,
        "curve": scan.scanned.iter().zip(&scan.objective).map(|(f, o)| {
            serde_json::json!({"omega2d_GHz": f, "max_transfer": o})
        }).collect::<Vec<_>>(),
        "optimum_GHz": scan.optimum,
        "refined": scan.refined,
    });
    m.write_file(
        "scan.json",
        serde_json::to_string_pretty(&json).expect("json").as_bytes(),
    )?;
    m.stage("emit");
    Ok(())
}
