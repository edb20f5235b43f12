//! Oracle-labelled dataset: generation, CSV persistence, and the
//! deterministic train/test/validation split.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scenario::{sample_system, ScenarioSpec};
use crate::error::{Error, Result};
use crate::parallel::{map_range, Execution};
use crate::reach::{deduce_trajectory, StepDeducer};
use crate::sets::IntervalBox;

pub const INPUT_COLUMNS: [&str; 16] = [
    "c_xpos", "c_ypos", "c_theta", "c_v", "c_w", "c_r", "c_acc", "c_deltaf", "r_xpos", "r_ypos", "r_theta", "r_v",
    "r_w", "r_r", "r_acc", "r_deltaf",
];

pub const LABEL_COLUMNS: [&str; 12] = [
    "next_c_xpos",
    "next_c_ypos",
    "next_c_theta",
    "next_c_v",
    "next_c_w",
    "next_c_r",
    "next_r_xpos",
    "next_r_ypos",
    "next_r_theta",
    "next_r_v",
    "next_r_w",
    "next_r_r",
];

/// Experiments handed to the worker pool at once. Bounds memory while
/// keeping output order independent of scheduling.
const BLOCK: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSample {
    /// State centers, control centers, state radii, control radii.
    pub input: [f64; 16],
    /// Next-state centers then radii.
    pub label: [f64; 12],
    pub experiment_id: u64,
    pub step: usize,
    pub vehicle_id: usize,
}

impl DatasetSample {
    pub fn from_boxes(
        state: &IntervalBox,
        control: &IntervalBox,
        next: &IntervalBox,
        experiment_id: u64,
        step: usize,
        vehicle_id: usize,
    ) -> Self {
        let mut input = [0.0; 16];
        input[..6].copy_from_slice(state.centers());
        input[6..8].copy_from_slice(control.centers());
        input[8..14].copy_from_slice(state.radii());
        input[14..16].copy_from_slice(control.radii());
        let mut label = [0.0; 12];
        label[..6].copy_from_slice(next.centers());
        label[6..].copy_from_slice(next.radii());
        Self {
            input,
            label,
            experiment_id,
            step,
            vehicle_id,
        }
    }

    pub fn state_box(&self) -> Result<IntervalBox> {
        IntervalBox::new(self.input[..6].to_vec(), self.input[8..14].to_vec())
    }

    pub fn control_box(&self) -> Result<IntervalBox> {
        IntervalBox::new(self.input[6..8].to_vec(), self.input[14..16].to_vec())
    }

    pub fn label_box(&self) -> Result<IntervalBox> {
        IntervalBox::new(self.label[..6].to_vec(), self.label[6..].to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    Validation,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 5:1:1 split keyed on the experiment, so all steps of one rollout land
/// in the same split.
pub fn split_of(experiment_id: u64) -> Split {
    match splitmix64(experiment_id) % 7 {
        0..=4 => Split::Train,
        5 => Split::Test,
        _ => Split::Validation,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub experiments: usize,
    pub completed: usize,
    pub skipped: usize,
    pub samples: usize,
    pub skip_reasons: BTreeMap<String, usize>,
}

/// RNG for one experiment: the master seed selects the key, the experiment
/// id the stream, so experiments are independent of scheduling.
pub fn experiment_rng(seed: u64, experiment_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(experiment_id);
    rng
}

/// Samples one experiment and returns its oracle-labelled samples in
/// step-major, vehicle-minor order.
pub fn run_experiment(
    spec: &ScenarioSpec,
    oracle: &dyn StepDeducer,
    seed: u64,
    experiment_id: u64,
) -> Result<Vec<DatasetSample>> {
    let mut rng = experiment_rng(seed, experiment_id);
    let system = sample_system(spec, &mut rng)?;
    let traces = deduce_trajectory(&system, oracle, spec.horizon)?;
    let mut out = Vec::with_capacity(spec.horizon * traces.len());
    for step in 0..spec.horizon {
        for (vid, trace) in traces.iter().enumerate() {
            let state = if step == 0 {
                &system.vehicles[vid].state
            } else {
                &trace.steps[step - 1]
            };
            out.push(DatasetSample::from_boxes(
                state,
                &trace.controls[step],
                &trace.steps[step],
                experiment_id,
                step,
                vid,
            ));
        }
    }
    Ok(out)
}

/// Runs `n_experiments` rollouts and streams one sample per vehicle per
/// step into `sink`, in experiment order. Failed experiments are logged,
/// skipped, and tallied in the summary.
pub fn generate_dataset(
    spec: &ScenarioSpec,
    oracle: &dyn StepDeducer,
    n_experiments: usize,
    seed: u64,
    exec: Execution,
    mut sink: impl FnMut(DatasetSample) -> Result<()>,
) -> Result<GenerationSummary> {
    let mut summary = GenerationSummary {
        experiments: n_experiments,
        ..GenerationSummary::default()
    };
    let mut start = 0;
    while start < n_experiments {
        let len = BLOCK.min(n_experiments - start);
        let results = map_range(exec, len, |k| run_experiment(spec, oracle, seed, (start + k) as u64));
        for (k, res) in results.into_iter().enumerate() {
            match res {
                Ok(samples) => {
                    summary.completed += 1;
                    summary.samples += samples.len();
                    for s in samples {
                        sink(s)?;
                    }
                }
                Err(e) => {
                    log::warn!("experiment {} skipped: {e}", start + k);
                    summary.skipped += 1;
                    *summary.skip_reasons.entry(e.kind().to_string()).or_default() += 1;
                }
            }
        }
        start += len;
    }
    Ok(summary)
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Streaming CSV writer with the fixed dataset header.
pub struct DatasetWriter<W: Write> {
    inner: csv::Writer<W>,
    record: Vec<String>,
}

impl<W: Write> DatasetWriter<W> {
    pub fn new(writer: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(writer);
        let header: Vec<&str> = ["experiment_id", "step", "vehicle_id"]
            .into_iter()
            .chain(INPUT_COLUMNS)
            .chain(LABEL_COLUMNS)
            .collect();
        inner.write_record(&header)?;
        Ok(Self {
            inner,
            record: Vec::with_capacity(header.len()),
        })
    }

    pub fn write(&mut self, s: &DatasetSample) -> Result<()> {
        self.record.clear();
        self.record.push(s.experiment_id.to_string());
        self.record.push(s.step.to_string());
        self.record.push(s.vehicle_id.to_string());
        self.record.extend(s.input.iter().chain(&s.label).map(|&x| fmt_f64(x)));
        self.inner.write_record(&self.record)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush().map_err(csv::Error::from)?;
        self.inner
            .into_inner()
            .map_err(|e| Error::Csv(csv::Error::from(e.into_error())))
    }
}

pub fn write_dataset(path: &Path, samples: &[DatasetSample]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = DatasetWriter::new(BufWriter::new(file))?;
    for s in samples {
        w.write(s)?;
    }
    w.finish()?.flush().map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<Vec<DatasetSample>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(std::io::BufReader::new(file));
    let width = 3 + INPUT_COLUMNS.len() + LABEL_COLUMNS.len();
    let headers = reader.headers()?;
    if headers.len() != width {
        return Err(Error::DimensionMismatch {
            expected: width,
            got: headers.len(),
        });
    }
    let bad = |row: usize, col: usize| Error::InvalidSet(format!("{}: row {row}, column {col} is not a number", path.display()));
    let mut out = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        let int = |i: usize| rec[i].parse::<u64>().map_err(|_| bad(row + 1, i));
        let float = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(row + 1, i));
        let mut input = [0.0; 16];
        for (k, v) in input.iter_mut().enumerate() {
            *v = float(3 + k)?;
        }
        let mut label = [0.0; 12];
        for (k, v) in label.iter_mut().enumerate() {
            *v = float(19 + k)?;
        }
        out.push(DatasetSample {
            input,
            label,
            experiment_id: int(0)?,
            step: int(1)? as usize,
            vehicle_id: int(2)? as usize,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::BicycleModel;
    use crate::reach::{sample_successors, Oracle, StepInput};
    use crate::datagen::VariableRange;

    fn collect(spec: &ScenarioSpec, n: usize, seed: u64, exec: Execution) -> (Vec<DatasetSample>, GenerationSummary) {
        let oracle = Oracle::linearized(BicycleModel::default());
        let mut out = Vec::new();
        let summary = generate_dataset(spec, &oracle, n, seed, exec, |s| {
            out.push(s);
            Ok(())
        })
        .unwrap();
        (out, summary)
    }

    #[test]
    fn one_experiment_gives_horizon_samples() {
        let (samples, summary) = collect(&ScenarioSpec::default(), 1, 3, Execution::Sequential);
        assert_eq!(samples.len(), 5);
        assert_eq!(summary.samples, 5);
        assert_eq!(summary.skipped, 0);
        let steps: Vec<usize> = samples.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![0, 1, 2, 3, 4]);
        // consecutive samples chain: label of step k is the state of step k+1
        for w in samples.windows(2) {
            assert_eq!(w[0].label_box().unwrap(), w[1].state_box().unwrap());
        }
    }

    #[test]
    fn two_vehicles_interleave() {
        let spec = ScenarioSpec {
            vehicles: 2,
            ..ScenarioSpec::default()
        };
        let (samples, _) = collect(&spec, 2, 3, Execution::Sequential);
        assert_eq!(samples.len(), 20);
        assert!(samples.iter().filter(|s| s.vehicle_id == 1).count() == 10);
    }

    #[test]
    fn labels_match_oracle() {
        let model = BicycleModel::default();
        let oracle = Oracle::linearized(model);
        let (samples, _) = collect(&ScenarioSpec::default(), 20, 5, Execution::Parallel);
        for s in &samples {
            let input = StepInput::new(s.state_box().unwrap(), s.control_box().unwrap(), 0.2);
            assert_eq!(oracle.deduce_step(&input).unwrap(), s.label_box().unwrap());
        }
    }

    #[test]
    fn labels_contain_sampled_successors() {
        let model = BicycleModel::default();
        let (samples, _) = collect(&ScenarioSpec::default(), 200, 9, Execution::Parallel);
        for s in samples.iter().step_by(100) {
            let input = StepInput::new(s.state_box().unwrap(), s.control_box().unwrap(), 0.2);
            let label = s.label_box().unwrap();
            for x in sample_successors(&model, &input, 100, s.experiment_id, Execution::Sequential).unwrap() {
                assert!(label.contains(&x, 1e-9));
            }
        }
    }

    #[test]
    fn execution_mode_does_not_change_output() {
        let spec = ScenarioSpec::default();
        let (a, _) = collect(&spec, 300, 11, Execution::Sequential);
        let (b, _) = collect(&spec, 300, 11, Execution::Parallel);
        assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let (samples, _) = collect(&ScenarioSpec::default(), 3, 1, Execution::Sequential);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_dataset(&path, &samples).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(back, samples);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("experiment_id,step,vehicle_id,c_xpos,"));
        assert_eq!(text.lines().count(), 16);
    }

    #[test]
    fn same_seed_same_bytes() {
        let bytes = |seed| {
            let (samples, _) = collect(&ScenarioSpec::default(), 10, seed, Execution::Parallel);
            let mut w = DatasetWriter::new(Vec::new()).unwrap();
            for s in &samples {
                w.write(s).unwrap();
            }
            w.finish().unwrap()
        };
        assert_eq!(bytes(4), bytes(4));
        assert_ne!(bytes(4), bytes(5));
    }

    #[test]
    fn failures_are_counted() {
        let spec = ScenarioSpec {
            vehicles: 2,
            bv_gap: [0.0, 0.0],
            y_pos: VariableRange::new([0.0, 0.0], [0.25, 0.5]),
            placement_attempts: 2,
            ..ScenarioSpec::default()
        };
        let (samples, summary) = collect(&spec, 4, 1, Execution::Sequential);
        assert!(samples.is_empty());
        assert_eq!(summary.skipped, 4);
        assert_eq!(summary.skip_reasons.get("placement_failed"), Some(&4));
    }

    #[test]
    fn split_is_roughly_five_one_one() {
        let mut counts = BTreeMap::new();
        for id in 0..70_000u64 {
            *counts.entry(split_of(id)).or_insert(0usize) += 1;
        }
        let frac = |s| counts[&s] as f64 / 70_000.0;
        assert!((frac(Split::Train) - 5.0 / 7.0).abs() < 0.01);
        assert!((frac(Split::Test) - 1.0 / 7.0).abs() < 0.01);
        assert!((frac(Split::Validation) - 1.0 / 7.0).abs() < 0.01);
    }
}
