//! Linear models, error reduction over a random baseline, significance tests,
//! and the evaluation of split strategies against new samples.

mod evaluate;
mod metrics;
mod model;
mod report;
mod stats;

pub use evaluate::{
    drift_analysis, evaluate_manifest, evaluate_strategies, evaluate_strategy, new_sample_reference, DriftPoint,
    pooled_mse, DriftReport, EvaluationConfig, EvaluationReport, EvaluationSummary, Metric, RunScore, EVAL_LEARNING_RATE,
    NEW_SAMPLES,
};
pub use metrics::{accuracy, error_reduction, mse_of_estimates, multinomial_baseline, regression_score, rmse};
pub use model::{
    predict, train_linear_model, train_ridge, FeatureMatrix, LinearModel, ModelConfig, Objective, Prediction,
    RidgeModel,
};
pub use report::render_table;
pub use stats::{
    drift_correlation, mcnemar_from_predictions, mcnemar_test, paired_bootstrap_test, DriftCorrelation,
    SystemComparison, TestName, MCNEMAR_EXACT_BELOW,
};
