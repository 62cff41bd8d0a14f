//! Distribution metrics between intensity histograms and overlap metrics
//! between segmentation masks.

pub mod distribution;
pub mod report;
pub mod segmentation;

pub use distribution::{bhattacharyya, correlation, histogram, histogram_masked, mean_histogram, Histogram};
pub use report::MetricReport;
pub use segmentation::{confusion, segmentation_metrics, ClassMetrics, Confusion, SegmentationScores};
