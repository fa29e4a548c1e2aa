pub mod formats;
pub mod ply;

pub use formats::{
    read_json, to_json_string, write_json, DetectionsFile, GroundTruthFile, RackModelFile, ResultsFile,
};
pub use ply::{encode_ply, parse_ply, read_ply, write_ply, PlyEncoding};
