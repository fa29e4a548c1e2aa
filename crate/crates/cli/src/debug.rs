use tubepose_core::synthetic::sample_cylinder;
use tubepose_core::{PipelineOutput, PointCloud, Result, TubeDetection};

const RACK: [u8; 3] = [150, 150, 150];
const PALETTE: [[u8; 3]; 8] = [
    [230, 25, 75],
    [60, 180, 75],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
];
/// Surface density of the fitted-cylinder samples, points per m^2.
const SAMPLE_DENSITY: f64 = 5.0e5;

fn lighten([r, g, b]: [u8; 3]) -> [u8; 3] {
    let up = |c: u8| ((c as u16 + 255) / 2) as u8;
    [up(r), up(g), up(b)]
}

/// Rack points in grey, each detection in its own colour, and points sampled
/// on every fitted cylinder in a lighter shade of the same colour.
pub fn debug_cloud(
    rack_cloud: &PointCloud,
    detections: &[TubeDetection],
    output: &PipelineOutput,
) -> Result<(PointCloud, Vec<[u8; 3]>)> {
    let mut cloud = rack_cloud.clone();
    let mut colors = vec![RACK; rack_cloud.len()];
    for (i, (d, e)) in detections.iter().zip(&output.tubes).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        cloud.extend(&d.cloud);
        colors.resize(cloud.len(), color);
        if let Some(fit) = &e.fit {
            let samples = sample_cylinder(&d.spec, &fit.pose, SAMPLE_DENSITY, 0.0, i as u64)?;
            cloud.extend(&samples);
            colors.resize(cloud.len(), lighten(color));
        }
    }
    Ok((cloud, colors))
}
