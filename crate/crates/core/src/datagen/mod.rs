//! Scenario construction, driver models, and the oracle-labelled dataset
//! pipeline.

mod controllers;
mod dataset;
mod scenario;

pub use controllers::{
    bv_feedback_control, idm_acceleration, idm_acceleration_raw, mobil_lane_change, FeedbackGains, IdmParams,
    LaneDecision, LaneVehicle, MobilParams,
};
pub use dataset::{
    experiment_rng, generate_dataset, read_dataset, run_experiment, split_of, write_dataset, DatasetSample, DatasetWriter, GenerationSummary, Split,
    INPUT_COLUMNS, LABEL_COLUMNS,
};
pub use scenario::{expand_control, sample_system, Role, ScenarioSpec, VariableRange, Vehicle, VehicleSystem};
