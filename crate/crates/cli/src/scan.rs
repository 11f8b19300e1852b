//! The `scan` subcommand: configuration merging, the per-N records, and
//! their CSV/JSON rendering.

use serde::Deserialize;

use phasecast::channel::{channel_params_vmf, kraus_vmf, liouville_vmf, ChannelParams};
use phasecast::estimation::{
    classical_fisher, lower_bound_f, n_opt_estimate, qfi_sequential_vmf,
    sigma_x_sensitivity_closed, sld, state_with_numeric_derivative, Sensitivity,
    StateWithDerivative,
};
use phasecast::linalg::{hermitian_eig, ComplexMatrix, DensityMatrix};
use phasecast::rng::SplitMix64;
use phasecast::settings::{
    bell_observable_sensitivity, evolve_with_ancilla, ghz_output_state, qfi_ancilla_closed,
    qfi_parallel_closed, separable_sensitivity_ancilla, sigma_x_tensor_sensitivity, BellSign,
};
use phasecast::vmf::VmfParams;

use crate::output::{fmt_float, fmt_option, fmt_option_json};
use crate::{Format, ScanArgs, Setting};

/// Largest probe count for which the parallel SLD measurement is evaluated
/// by dense eigendecomposition; beyond it the column reads NA.
const PARALLEL_BRUTE_FORCE_CAP: u32 = 8;

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct ObservableSet {
    pub sld_optimal: bool,
    pub sigma_x: bool,
    pub sigma_x_tensor: bool,
    pub bell_projector: bool,
}

impl ObservableSet {
    fn all() -> Self {
        Self {
            sld_optimal: true,
            sigma_x: true,
            sigma_x_tensor: true,
            bell_projector: true,
        }
    }

    fn parse(spec: &str) -> Result<Self, String> {
        let mut set = Self {
            sld_optimal: false,
            sigma_x: false,
            sigma_x_tensor: false,
            bell_projector: false,
        };
        for token in spec.split(',') {
            match token.trim() {
                "sld-optimal" => set.sld_optimal = true,
                "sigma-x" => set.sigma_x = true,
                "sigma-x-tensor" => set.sigma_x_tensor = true,
                "bell-projector" => set.bell_projector = true,
                "" => {}
                other => return Err(format!("unknown observable '{other}'")),
            }
        }
        Ok(set)
    }
}

/// Raw JSON mirror of the flag set; every field optional so flags override.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    setting: Option<String>,
    phi: Option<f64>,
    kappa: Option<f64>,
    n_min: Option<u32>,
    n_max: Option<u32>,
    observables: Option<String>,
    mc_samples: Option<u64>,
    seed: Option<u64>,
    format: Option<String>,
}

pub struct ScanConfig {
    pub setting: Setting,
    pub phi: f64,
    pub kappa: f64,
    pub n_min: u32,
    pub n_max: u32,
    pub observables: ObservableSet,
    pub mc_samples: u64,
    pub seed: u64,
    pub format: Format,
}

impl ScanConfig {
    /// Merge config file (if any) with flags; flags win field by field.
    pub fn assemble(args: ScanArgs) -> Result<Self, String> {
        let file: FileConfig = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                serde_json::from_str(&text)
                    .map_err(|e| format!("bad config {}: {e}", path.display()))?
            }
            None => FileConfig::default(),
        };

        let setting = match args.setting {
            Some(s) => s,
            None => match file.setting.as_deref() {
                Some("sequential") => Setting::Sequential,
                Some("ancilla") => Setting::Ancilla,
                Some("parallel") => Setting::Parallel,
                Some(other) => return Err(format!("unknown setting '{other}'")),
                None => return Err("missing --setting".into()),
            },
        };
        let phi = args.phi.or(file.phi).ok_or("missing --phi")?;
        let kappa = args.kappa.or(file.kappa).ok_or("missing --kappa")?;
        let n_min = args.n_min.or(file.n_min).unwrap_or(1);
        let n_max = args.n_max.or(file.n_max).ok_or("missing --n-max")?;
        if n_min < 1 || n_max < n_min {
            return Err(format!("need 1 <= n_min <= n_max, got [{n_min}, {n_max}]"));
        }
        if kappa.is_nan() || kappa <= 0.0 {
            return Err(format!("kappa must be positive, got {kappa}"));
        }
        let observables = match args.observables.or(file.observables) {
            Some(spec) => ObservableSet::parse(&spec)?,
            None => ObservableSet::all(),
        };
        let format = match args.format {
            Some(f) => f,
            None => match file.format.as_deref() {
                Some("csv") | None => Format::Csv,
                Some("json") => Format::Json,
                Some(other) => return Err(format!("unknown format '{other}'")),
            },
        };
        Ok(Self {
            setting,
            phi,
            kappa,
            n_min,
            n_max,
            observables,
            mc_samples: args.mc_samples.or(file.mc_samples).unwrap_or(0),
            seed: args.seed.or(file.seed).unwrap_or_else(crate::seed_fallback),
            format,
        })
    }
}

pub struct ScanRecord {
    pub n: u32,
    pub qfi: f64,
    pub f_lower: f64,
    pub sens_sigma_x: Option<f64>,
    pub sens_bell: Option<f64>,
    pub sens_opt: Option<f64>,
}

pub struct ScanResult {
    pub records: Vec<ScanRecord>,
    pub n_opt: u32,
}

fn sld_basis_fisher(pair: &StateWithDerivative) -> phasecast::Result<Sensitivity> {
    let l = sld(pair)?;
    let (_, v) = hermitian_eig(&l)?;
    let dim = l.dim();
    let projectors: Vec<ComplexMatrix> = (0..dim)
        .map(|k| {
            let mut p = ComplexMatrix::zeros(dim);
            for i in 0..dim {
                for j in 0..dim {
                    p[(i, j)] = v[(i, k)] * v[(j, k)].conj();
                }
            }
            p
        })
        .collect();
    classical_fisher(pair, &projectors)
}

fn sequential_pair(n: u32, phi: f64, kappa: f64) -> phasecast::Result<StateWithDerivative> {
    state_with_numeric_derivative(
        move |x| {
            let kraus = kraus_vmf(&VmfParams::new(x, kappa)?)?;
            let mut m = DensityMatrix::plus_state().matrix().clone();
            for _ in 0..n {
                m = kraus.apply_matrix(&m);
            }
            Ok(m)
        },
        phi,
    )
}

fn ancilla_pair(n: u32, phi: f64, kappa: f64) -> phasecast::Result<StateWithDerivative> {
    state_with_numeric_derivative(
        move |x| {
            let channel = liouville_vmf(&VmfParams::new(x, kappa)?)?;
            Ok(evolve_with_ancilla(n, &channel, BellSign::Plus)?
                .rho()
                .matrix()
                .clone())
        },
        phi,
    )
}

fn parallel_pair(n: u32, phi: f64, kappa: f64) -> phasecast::Result<StateWithDerivative> {
    state_with_numeric_derivative(
        move |x| {
            let c = channel_params_vmf(&VmfParams::new(x, kappa)?)?;
            Ok(ghz_output_state(n, &c)?.to_dense())
        },
        phi,
    )
}

/// Monte Carlo sigma_x sensitivity for the sequential setting: the state is
/// evolved by sampled unitaries round by round, and the phase derivative of
/// the expectation uses common random numbers — every stencil offset replays
/// the identical axis stream, so the sampling noise cancels in the
/// difference and the result is reproducible from the seed.
fn mc_sigma_x_sensitivity(
    n: u32,
    phi: f64,
    kappa: f64,
    samples: u64,
    seed: u64,
) -> phasecast::Result<Option<f64>> {
    let evolve = |x: f64| -> phasecast::Result<ComplexMatrix> {
        let p = VmfParams::new(x, kappa)?;
        let mut rng = SplitMix64::new(seed);
        let mut state = DensityMatrix::plus_state();
        for _ in 0..n {
            state = phasecast::channel::apply_channel_mc(&state, &p, samples, &mut rng)?;
        }
        Ok(state.matrix().clone())
    };
    let pair = state_with_numeric_derivative(evolve, phi)?;
    Ok(
        phasecast::estimation::observable_sensitivity(&pair, &phasecast::linalg::pauli_x())?
            .value(),
    )
}

fn record_for(
    n: u32,
    config: &ScanConfig,
    params: &ChannelParams,
) -> phasecast::Result<ScanRecord> {
    let qfi = match config.setting {
        Setting::Sequential => qfi_sequential_vmf(n, params)?,
        Setting::Ancilla => qfi_ancilla_closed(n, params)?,
        Setting::Parallel => qfi_parallel_closed(n, params)?,
    };
    let f_lower = lower_bound_f(n, params)?;
    let p = VmfParams::new(config.phi, config.kappa)?;

    let sens_sigma_x = match config.setting {
        Setting::Sequential if config.observables.sigma_x => {
            if config.mc_samples > 0 {
                mc_sigma_x_sensitivity(n, config.phi, config.kappa, config.mc_samples, config.seed)?
            } else {
                sigma_x_sensitivity_closed(n, params)?.value()
            }
        }
        Setting::Ancilla if config.observables.sigma_x_tensor => {
            separable_sensitivity_ancilla(n, &p)?.value()
        }
        Setting::Parallel if config.observables.sigma_x_tensor => {
            sigma_x_tensor_sensitivity(n, params)?.value()
        }
        _ => None,
    };

    let sens_bell = match config.setting {
        Setting::Ancilla if config.observables.bell_projector => {
            bell_observable_sensitivity(n, &p)?.value()
        }
        _ => None,
    };

    let sens_opt = if config.observables.sld_optimal && config.mc_samples == 0 {
        match config.setting {
            Setting::Sequential => {
                sld_basis_fisher(&sequential_pair(n, config.phi, config.kappa)?)?.value()
            }
            Setting::Ancilla => {
                sld_basis_fisher(&ancilla_pair(n, config.phi, config.kappa)?)?.value()
            }
            Setting::Parallel if n <= PARALLEL_BRUTE_FORCE_CAP => {
                sld_basis_fisher(&parallel_pair(n, config.phi, config.kappa)?)?.value()
            }
            Setting::Parallel => None,
        }
    } else {
        None
    };

    Ok(ScanRecord {
        n,
        qfi,
        f_lower,
        sens_sigma_x,
        sens_bell,
        sens_opt,
    })
}

/// Evaluate the grid. Rows are computed concurrently in contiguous chunks
/// and reassembled in N order, so the output never depends on scheduling.
pub fn run(config: &ScanConfig) -> phasecast::Result<ScanResult> {
    let params = channel_params_vmf(&VmfParams::new(config.phi, config.kappa)?)?;
    let n_opt = n_opt_estimate(&params)?;
    let all_n: Vec<u32> = (config.n_min..=config.n_max).collect();
    let threads = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .clamp(1, 8);
    let chunk = all_n.len().div_ceil(threads);
    let chunks: Vec<&[u32]> = all_n.chunks(chunk.max(1)).collect();
    let results: Vec<phasecast::Result<Vec<ScanRecord>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|ns| {
                let params = &params;
                scope.spawn(move || {
                    ns.iter()
                        .map(|&n| record_for(n, config, params))
                        .collect::<phasecast::Result<Vec<_>>>()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut records = Vec::with_capacity(all_n.len());
    for chunk in results {
        records.extend(chunk?);
    }
    Ok(ScanResult { records, n_opt })
}

pub fn render(config: &ScanConfig, result: &ScanResult) -> String {
    let records = &result.records;
    let n_opt = result.n_opt;
    match config.format {
        Format::Csv => {
            let mut out = String::from(
                "setting,N,phi,kappa,qfi,f_lower,sens_sigma_x,sens_bell,sens_opt,n_opt,seed\n",
            );
            for r in records {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    config.setting.label(),
                    r.n,
                    fmt_float(config.phi),
                    fmt_float(config.kappa),
                    fmt_float(r.qfi),
                    fmt_float(r.f_lower),
                    fmt_option(r.sens_sigma_x),
                    fmt_option(r.sens_bell),
                    fmt_option(r.sens_opt),
                    n_opt,
                    config.seed,
                ));
            }
            out
        }
        Format::Json => {
            let body: Vec<String> = records
                .iter()
                .map(|r| {
                    format!(
                        "{{\"setting\":\"{}\",\"N\":{},\"phi\":{},\"kappa\":{},\"qfi\":{},\"f_lower\":{},\"sens_sigma_x\":{},\"sens_bell\":{},\"sens_opt\":{},\"n_opt\":{},\"seed\":{}}}",
                        config.setting.label(),
                        r.n,
                        fmt_float(config.phi),
                        fmt_float(config.kappa),
                        fmt_float(r.qfi),
                        fmt_float(r.f_lower),
                        fmt_option_json(r.sens_sigma_x),
                        fmt_option_json(r.sens_bell),
                        fmt_option_json(r.sens_opt),
                        n_opt,
                        config.seed,
                    )
                })
                .collect();
            format!("[{}]\n", body.join(","))
        }
    }
}
