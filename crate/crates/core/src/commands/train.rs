use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{ensure_dir, write_json, write_text, ReportHeader, Status};
use crate::config::RunConfig;
use crate::datagen::{read_dataset, split_of, DatasetSample, Split};
use crate::error::{Error, Result};
use crate::metrics::{precision_pos, recall_pos, BoxPair2D, MeanStd};
use crate::parallel::{map_slice, Execution};
use crate::surrogate::{build_model, evaluate_loss, save_model, train, ScopeVectorIn, SurrogateModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub samples: usize,
    pub loss: f64,
    pub recall_pos: MeanStd,
    pub precision_pos: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    #[serde(flatten)]
    pub header: ReportHeader,
    pub parameters: usize,
    pub epochs: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub train: SplitMetrics,
    pub test: SplitMetrics,
    pub validation: SplitMetrics,
}

/// Loss and position coverage of one-step predictions on `samples`.
pub fn split_metrics(model: &SurrogateModel, samples: &[DatasetSample], exec: Execution) -> Result<SplitMetrics> {
    if samples.is_empty() {
        return Ok(SplitMetrics {
            samples: 0,
            loss: f64::NAN,
            recall_pos: MeanStd::default(),
            precision_pos: MeanStd::default(),
        });
    }
    let loss = evaluate_loss(model, samples, exec)?;
    let chunks: Vec<&[DatasetSample]> = samples.chunks(512).collect();
    let parts = map_slice(exec, &chunks, |chunk| -> Result<Vec<(f64, f64)>> {
        let xs: Vec<ScopeVectorIn> = chunk.iter().map(|s| ScopeVectorIn(s.input)).collect();
        let ys = model.forward_batch(&xs)?;
        chunk
            .iter()
            .zip(&ys)
            .map(|(s, y)| {
                let pair = BoxPair2D::from_states(&y.to_box()?, &s.label_box()?);
                Ok((recall_pos(&pair), precision_pos(&pair)))
            })
            .collect()
    });
    let mut recall = Vec::with_capacity(samples.len());
    let mut precision = Vec::with_capacity(samples.len());
    for part in parts {
        for (r, p) in part? {
            recall.push(r);
            precision.push(p);
        }
    }
    Ok(SplitMetrics {
        samples: samples.len(),
        loss,
        recall_pos: MeanStd::of(&recall),
        precision_pos: MeanStd::of(&precision),
    })
}

/// Splits a dataset 5:1:1 by experiment.
pub fn split_dataset(samples: Vec<DatasetSample>) -> (Vec<DatasetSample>, Vec<DatasetSample>, Vec<DatasetSample>) {
    let (mut train, mut test, mut val) = (Vec::new(), Vec::new(), Vec::new());
    for s in samples {
        match split_of(s.experiment_id) {
            Split::Train => train.push(s),
            Split::Test => test.push(s),
            Split::Validation => val.push(s),
        }
    }
    (train, test, val)
}

/// Trains the surrogate on the train split and writes the model,
/// `loss_history.csv`, and `train_report.json`.
pub fn cmd_train(cfg: &RunConfig) -> Result<(TrainReport, Status)> {
    cfg.validate()?;
    let path = cfg.dataset_path();
    if !path.exists() {
        return Err(Error::ConfigInvalid(format!(
            "dataset {} does not exist; run `generate` first",
            path.display()
        )));
    }
    ensure_dir(&cfg.out_dir)?;
    let (train_set, test_set, val_set) = split_dataset(read_dataset(&path)?);
    if train_set.is_empty() {
        return Err(Error::DatasetEmpty);
    }
    log::info!(
        "training on {} samples ({} test, {} validation)",
        train_set.len(),
        test_set.len(),
        val_set.len()
    );
    let t0 = Instant::now();
    let mut model = build_model(&cfg.surrogate, cfg.seed)?;
    let outcome = train(&mut model, &train_set, Some(val_set.as_slice()).filter(|v| !v.is_empty()), cfg.execution)?;
    let seconds = t0.elapsed().as_secs_f64();
    let model_path = cfg.model_path();
    if let Some(parent) = model_path.parent() {
        ensure_dir(parent)?;
    }
    save_model(&model, &model_path)?;

    let mut csv = String::from("epoch,learning_rate,train_loss,val_loss\n");
    for r in &outcome.history {
        let val = r.val_loss.map(|v| format!("{v:.16e}")).unwrap_or_default();
        writeln!(csv, "{},{:.16e},{:.16e},{val}", r.epoch, r.learning_rate, r.train_loss).expect("string write");
    }
    write_text(&cfg.out_dir.join("loss_history.csv"), &csv)?;

    let report = TrainReport {
        header: ReportHeader::new("train", cfg)?,
        parameters: model.num_params(),
        epochs: outcome.history.len(),
        initial_loss: outcome.initial_loss,
        final_loss: outcome.history.last().map_or(outcome.initial_loss, |r| r.train_loss),
        train: split_metrics(&model, &train_set, cfg.execution)?,
        test: split_metrics(&model, &test_set, cfg.execution)?,
        validation: split_metrics(&model, &val_set, cfg.execution)?,
    };
    write_json(&cfg.out_dir.join("train_report.json"), &report)?;
    write_json(
        &cfg.out_dir.join("train_timings.json"),
        &serde_json::json!({ "seconds": seconds, "epochs": report.epochs }),
    )?;
    Ok((report, Status::Success))
}
