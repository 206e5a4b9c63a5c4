use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;

/// Pixels per feature cell.
pub const CELL: u32 = 8;

/// Renders a feature vector as a one-row grayscale heatmap strip, min-max
/// scaled, `CELL` pixels per feature.
pub fn heatmap_png(features: &[f64]) -> Vec<u8> {
    let (lo, hi) = features
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    let levels: Vec<u8> = features
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - lo) / span * 255.0).round() as u8
            } else {
                128
            }
        })
        .collect();
    let width = features.len() as u32 * CELL;
    let mut row = Vec::with_capacity(width as usize);
    for &l in &levels {
        row.extend(std::iter::repeat_n(l, CELL as usize));
    }
    let pixels: Vec<u8> = row
        .iter()
        .copied()
        .cycle()
        .take(row.len() * CELL as usize)
        .collect();

    let mut out = Vec::new();
    let mut encoder = png::Encoder::new(&mut out, width.max(1), CELL);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    // writing into a Vec cannot fail
    let mut writer = encoder.write_header().expect("png header");
    writer.write_image_data(&pixels).expect("png data");
    writer.finish().expect("png finish");
    out
}

pub fn heatmap_base64(features: &[f64]) -> String {
    STANDARD.encode(heatmap_png(features))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strip_dimensions_and_levels() {
        let bytes = heatmap_png(&[0.0, 1.0, 0.5]);
        let decoder = png::Decoder::new(bytes.as_slice());
        let mut reader = decoder.read_info().unwrap();
        let mut buf = vec![0; reader.output_buffer_size()];
        let info = reader.next_frame(&mut buf).unwrap();
        assert_eq!((info.width, info.height), (24, 8));
        assert_eq!(&buf[..24], &[[0u8; 8], [255; 8], [128; 8]].concat()[..]);
    }

    #[test]
    fn deterministic() {
        assert_eq!(heatmap_base64(&[0.3, -2.0]), heatmap_base64(&[0.3, -2.0]));
    }
}
