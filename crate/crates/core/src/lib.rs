//! Pose estimation for test tubes held in a slotted rack, from 3D point
//! clouds.
//!
//! The rack pose comes from registering an analytic top-surface template
//! (minimum-area rectangle seeds refined by ICP). Each tube is then assigned
//! to the slot holding most of its projected hull and its tilt is fitted by
//! minimising the distance of its points to a cylinder pivoting at the slot's
//! bottom centre.

pub mod baseline;
pub mod bench;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod kdtree;
pub mod optim;
pub mod pipeline;
pub mod preprocess;
pub mod registration;
pub mod synthetic;
pub mod tube;

pub use error::{Error, Result};
pub use geometry::{PointCloud, Polygon2, RigidTransform, TiltAngles};
pub use eval::{evaluate_errors, ErrorReport, PoseRecord};
pub use pipeline::{run_pipeline, PipelineOptions, PipelineOutput, PreprocessOptions};
pub use registration::{estimate_rack_pose, IcpParams, RackModel, RackParams, RackPoseEstimate};
pub use synthetic::{generate_scene, SceneConfig, SyntheticScene};
pub use tube::{
    estimate_tubes, TubeDetection, TubeEstimateOptions, TubePoseEstimate, TubeSpec, TubeStatus,
};
