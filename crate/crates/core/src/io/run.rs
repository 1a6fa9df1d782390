use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, RelaxationModel, ScenarioKind};
use super::dataset::{self, Schema, Table};
use crate::analysis::{
    fit_efficiency_curve, fit_visibility, EfficiencyCurve, EfficiencyFitOptions, FitResult, Measured, Resampling,
    Uncertainty,
};
use crate::comb::{closed_form_efficiency, efficiency_for_depth, AfcParameters};
use crate::constants::{PhysicalConstants, CODATA_2018};
use crate::propagation::simulate_storage;
use crate::relaxation::{
    fit_direct, fit_hole_decay, fit_orbach, reconstruct_interleaved_scans, t1_direct, t1_orbach, DirectConditions,
    RelaxationParameters,
};
use crate::sequence::{
    burn_frequency_coverage, calibrate_pump_saturation, equalize_sidebands, phase_mod_spectrum, pump_to_comb,
    sufficient_cutoff,
};
use crate::{Error, Result};

pub const RESULTS_FILE: &str = "results.json";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

/// Everything a run produced. Nothing touches the disk until
/// [`RunReport::write`].
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub constants: PhysicalConstants,
    pub config: ExperimentConfig,
    pub results: Value,
    /// Dataset merges and model warnings.
    pub notes: Vec<String>,
    pub elapsed_s: f64,
    #[serde(skip)]
    pub files: Vec<OutputFile>,
}

impl RunReport {
    /// The reproducible payload: no timing, no paths.
    pub fn results_json(&self) -> String {
        let payload = json!({
            "scenario": self.scenario,
            "seed": self.seed,
            "results": self.results,
            "notes": self.notes,
        });
        serde_json::to_string_pretty(&payload).expect("JSON values serialize") + "\n"
    }

    pub fn report_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Writes every file under a temporary name first, then renames, so a
    /// failure never leaves a partial result set.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut all = vec![
            (RESULTS_FILE.to_string(), self.results_json()),
            (REPORT_FILE.to_string(), self.report_json()),
        ];
        all.extend(self.files.iter().map(|f| (f.name.clone(), f.contents.clone())));
        let mut staged = Vec::with_capacity(all.len());
        for (name, contents) in &all {
            let tmp = dir.join(format!(".{name}.partial"));
            if let Err(e) = std::fs::write(&tmp, contents) {
                for (t, _) in &staged {
                    let _ = std::fs::remove_file(t);
                }
                return Err(e.into());
            }
            staged.push((tmp, dir.join(name)));
        }
        for (tmp, dest) in staged {
            std::fs::rename(tmp, dest)?;
        }
        Ok(())
    }
}

struct Outcome {
    results: Value,
    notes: Vec<String>,
    files: Vec<OutputFile>,
}

fn csv_file(name: &str, table: &Table) -> Result<OutputFile> {
    Ok(OutputFile {
        name: name.to_string(),
        contents: dataset::table_to_string(table)?,
    })
}

fn merge_note(notes: &mut Vec<String>, table: &Table) {
    if table.merged_duplicates > 0 {
        notes.push(format!(
            "{} duplicate rows averaged in the {:?} dataset",
            table.merged_duplicates, table.schema
        ));
    }
}

fn check_converged(fit: &FitResult) -> Result<()> {
    if fit.converged {
        Ok(())
    } else {
        Err(Error::Numerical(format!("fit did not converge (last iterate {:?})", fit.params)))
    }
}

/// Validates `config` for `kind`, then runs the pipeline in memory.
pub fn run(config: &ExperimentConfig, kind: ScenarioKind, seed: u64) -> Result<RunReport> {
    config.validate(kind)?;
    let started = Instant::now();
    let plot = config.output.plot_data;
    let outcome = match kind {
        ScenarioKind::EfficiencySweep => efficiency_sweep(config, plot)?,
        ScenarioKind::Propagate => propagate(config, plot)?,
        ScenarioKind::RelaxationFit => relaxation_fit(config, seed, plot)?,
        ScenarioKind::CombDesign => comb_design(config, plot)?,
        ScenarioKind::VisibilityFit => visibility(config)?,
        ScenarioKind::EfficiencyFit => efficiency_fit(config, seed, plot)?,
    };
    Ok(RunReport {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        scenario: kind,
        seed,
        constants: CODATA_2018,
        config: config.clone(),
        results: outcome.results,
        notes: outcome.notes,
        elapsed_s: started.elapsed().as_secs_f64(),
        files: outcome.files,
    })
}

fn efficiency_sweep(config: &ExperimentConfig, plot: bool) -> Result<Outcome> {
    let s = config.efficiency_sweep.as_ref().expect("validated");
    let times = s.storage_time_s.values();
    let etas = times
        .par_iter()
        .map(|&t| {
            let afc = AfcParameters::for_storage_time(s.hole_depth, s.hole_fwhm_hz, t, s.tooth_count)?;
            efficiency_for_depth(&afc, s.optical_depth, s.depth_convention)
        })
        .collect::<Result<Vec<f64>>>()?;
    let peak = etas
        .iter()
        .enumerate()
        .fold(0, |best, (i, e)| if *e > etas[best] { i } else { best });
    let points: Vec<Value> = times
        .iter()
        .zip(&etas)
        .map(|(t, e)| json!({ "storage_time_s": t, "efficiency": e }))
        .collect();
    let mut files = Vec::new();
    if plot {
        let table = Table::new(Schema::EfficiencyCurve, vec![times.clone(), etas.clone(), vec![0.0; times.len()]])?;
        files.push(csv_file("efficiency_curve.csv", &table)?);
    }
    Ok(Outcome {
        results: json!({
            "optical_depth": s.optical_depth,
            "depth_convention": s.depth_convention,
            "points": points,
            "peak": { "storage_time_s": times[peak], "efficiency": etas[peak] },
        }),
        notes: Vec::new(),
        files,
    })
}

fn propagate(config: &ExperimentConfig, plot: bool) -> Result<Outcome> {
    let s = config.propagate.as_ref().expect("validated");
    let run = simulate_storage(&s.afc, &s.ensemble, &s.pulse.setup())?;
    let closed = closed_form_efficiency(&s.afc, &s.ensemble)?;
    let mut files = Vec::new();
    if plot {
        files.push(csv_file("input_waveform.csv", &dataset::waveform_table(&run.input))?);
        files.push(csv_file("output_waveform.csv", &dataset::waveform_table(&run.output))?);
    }
    Ok(Outcome {
        results: json!({
            "echoes": run.echoes,
            "simulated_efficiency": run.echoes.efficiency(),
            "closed_form": closed,
            "samples": run.input.len(),
            "time_step_s": run.input.time_step,
        }),
        notes: run.warnings,
        files,
    })
}

fn resampling(draws: Option<usize>, seed: u64) -> Uncertainty {
    match draws {
        Some(n) => Uncertainty::Resample(Resampling::new(n, seed)),
        None => Uncertainty::Covariance,
    }
}

fn relaxation_fit(config: &ExperimentConfig, seed: u64, plot: bool) -> Result<Outcome> {
    let s = config.relaxation_fit.as_ref().expect("validated");
    let path = config.resolve(&s.data);
    let uncertainty = resampling(s.resample_draws, seed);
    let mut notes = Vec::new();
    let mut files = Vec::new();
    let results = match s.model {
        RelaxationModel::Orbach => {
            let table = dataset::read_table(&path, Schema::OrbachLifetimes)?;
            merge_note(&mut notes, &table);
            let e_cf = Measured::new(s.crystal_field_hz.expect("validated"), s.crystal_field_sigma_hz);
            let (temps, life) = (table.column("temperature_K"), table.column("lifetime_s"));
            let fit = fit_orbach(temps, life, dataset::optional_sigmas(table.column("sigma_s")), e_cf, uncertainty)?;
            if plot {
                let p = RelaxationParameters {
                    alpha_orbach: fit.value("alpha_orbach"),
                    crystal_field_hz: e_cf.value,
                    alpha_direct: 1.0,
                    g_eff: 1.0,
                };
                let model = temps.iter().map(|&t| t1_orbach(t, &p)).collect::<Result<Vec<_>>>()?;
                let t = Table::new(Schema::OrbachLifetimes, vec![temps.to_vec(), model, vec![0.0; temps.len()]])?;
                files.push(csv_file("orbach_model.csv", &t)?);
            }
            json!({ "model": s.model, "fit": fit, "points": table.len() })
        }
        RelaxationModel::Direct => {
            let table = dataset::read_table(&path, Schema::DirectLifetimes)?;
            merge_note(&mut notes, &table);
            let conditions = DirectConditions {
                temperature_k: Measured::new(s.temperature_k.expect("validated"), s.temperature_sigma_k),
                g_eff: Measured::new(s.g_eff.expect("validated"), s.g_eff_sigma),
                field_rel_sigma: s.field_rel_sigma,
            };
            let (fields, life) = (table.column("field_T"), table.column("lifetime_s"));
            let fit = fit_direct(fields, life, dataset::optional_sigmas(table.column("sigma_s")), &conditions, uncertainty)?;
            check_converged(&fit)?;
            if plot {
                let p = RelaxationParameters {
                    alpha_orbach: 1.0,
                    crystal_field_hz: 1.0,
                    alpha_direct: fit.value("alpha_direct"),
                    g_eff: conditions.g_eff.value,
                };
                let model = fields
                    .iter()
                    .map(|&b| t1_direct(b, conditions.temperature_k.value, &p))
                    .collect::<Result<Vec<_>>>()?;
                let t = Table::new(Schema::DirectLifetimes, vec![fields.to_vec(), model, vec![0.0; fields.len()]])?;
                files.push(csv_file("direct_model.csv", &t)?);
            }
            json!({ "model": s.model, "fit": fit, "points": table.len() })
        }
        RelaxationModel::HoleDecay => {
            let table = dataset::read_table(&path, Schema::HoleDecay)?;
            merge_note(&mut notes, &table);
            let series = dataset::hole_decay_from_table(&table);
            let fit = fit_hole_decay(&series)?;
            check_converged(&fit)?;
            json!({ "model": s.model, "fit": fit, "points": table.len() })
        }
        RelaxationModel::InterleavedScans => {
            let table = dataset::read_table(&path, Schema::InterleavedScans)?;
            let records = dataset::probe_records_from_table(&table)?;
            let series = reconstruct_interleaved_scans(&records)?;
            let fit = fit_hole_decay(&series)?;
            check_converged(&fit)?;
            files.push(csv_file("hole_decay.csv", &dataset::hole_decay_table(&series))?);
            json!({ "model": s.model, "fit": fit, "series": series })
        }
    };
    Ok(Outcome { results, notes, files })
}

fn comb_design(config: &ExperimentConfig, plot: bool) -> Result<Outcome> {
    let s = config.comb_design.as_ref().expect("validated");
    let eq = equalize_sidebands(&s.equalizer())?;
    let plan = s.plan(eq.beta1, eq.beta2, eq.relative_phase);
    let cutoff = sufficient_cutoff(plan.beta1).max(sufficient_cutoff(plan.beta2));
    let spectrum = phase_mod_spectrum(&plan, cutoff)?;
    let coverage = burn_frequency_coverage(&plan)?;
    let kappa = match s.saturation_per_joule {
        Some(k) => k,
        None => calibrate_pump_saturation(&coverage, s.target_depth.unwrap_or(0.26), s.max_depth)?,
    };
    let afc = pump_to_comb(&coverage, &s.pump(kappa))?;
    let mut files = vec![csv_file(
        "coverage.csv",
        &Table::new(
            Schema::Spectrum,
            vec![coverage.frequencies_hz.clone(), coverage.line_powers.clone()],
        )?,
    )?];
    if plot {
        files.push(csv_file(
            "spectrum.csv",
            &Table::new(Schema::Spectrum, vec![spectrum.frequencies.clone(), spectrum.powers.clone()])?,
        )?);
    }
    Ok(Outcome {
        results: json!({
            "equalization": eq,
            "plan": plan,
            "burn_pulses": plan.burn_pulse_count(),
            "coverage": coverage,
            "saturation_per_joule": kappa,
            "afc": afc,
        }),
        notes: Vec::new(),
        files,
    })
}

fn visibility(config: &ExperimentConfig) -> Result<Outcome> {
    let s = config.visibility_fit.as_ref().expect("validated");
    let table = dataset::read_table(&config.resolve(&s.data), Schema::VisibilityScan)?;
    let mut notes = Vec::new();
    merge_note(&mut notes, &table);
    let fit = fit_visibility(&dataset::visibility_from_table(&table))?;
    check_converged(&fit)?;
    Ok(Outcome {
        results: json!({ "fit": fit, "points": table.len() }),
        notes,
        files: Vec::new(),
    })
}

fn efficiency_fit(config: &ExperimentConfig, seed: u64, plot: bool) -> Result<Outcome> {
    let s = config.efficiency_fit.as_ref().expect("validated");
    let table = dataset::read_table(&config.resolve(&s.data), Schema::EfficiencyCurve)?;
    let mut notes = Vec::new();
    merge_note(&mut notes, &table);
    let afc = s.afc()?;
    let options = EfficiencyFitOptions {
        convention: s.depth_convention,
        uncertainty: resampling(s.resample_draws, seed),
        hole_depth_sigma: s.hole_depth_sigma,
        hole_fwhm_sigma_hz: s.hole_fwhm_sigma_hz,
    };
    let t = table.column("storage_time_s");
    let fit = fit_efficiency_curve(
        t,
        table.column("efficiency"),
        dataset::optional_sigmas(table.column("sigma")),
        &afc,
        &options,
    )?;
    check_converged(&fit)?;
    let mut files = Vec::new();
    if plot {
        let curve = EfficiencyCurve::from_afc(&afc, s.depth_convention);
        let d = fit.value("optical_depth");
        let model = t.iter().map(|&t| curve.efficiency(t, d)).collect::<Result<Vec<_>>>()?;
        files.push(csv_file(
            "efficiency_model.csv",
            &Table::new(Schema::EfficiencyCurve, vec![t.to_vec(), model, vec![0.0; t.len()]])?,
        )?);
    }
    Ok(Outcome {
        results: json!({ "fit": fit, "points": table.len() }),
        notes,
        files,
    })
}
