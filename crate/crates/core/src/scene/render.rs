use super::config::SceneConfig;

/// RGB camera frame, row-major, 3 bytes per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl Frame {
    pub fn pixel(&self, col: u32, row: u32) -> [u8; 3] {
        let i = 3 * (row as usize * self.width as usize + col as usize);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }
}

pub const BACKGROUND_RGB: [u8; 3] = [150, 170, 190];
pub const OBSTACLE_RGB: [u8; 3] = [40, 40, 48];
pub const RX_RGB: [u8; 3] = [250, 250, 250];
const POINT_PALETTE: [[u8; 3]; 6] = [
    [220, 40, 40],
    [40, 190, 70],
    [240, 200, 30],
    [190, 60, 220],
    [30, 200, 220],
    [250, 130, 20],
];

const MARKER_WIDTH_M: f64 = 0.3;
const TX_MARKER_HEIGHT_M: f64 = 0.3;
const RX_MARKER_HEIGHT_M: f64 = 0.75;

/// Image column of world coordinate `x` (continuous, not rounded).
pub fn column_of(config: &SceneConfig, x: f64) -> f64 {
    let cam = &config.camera;
    (x - cam.x_min) / (cam.x_max - cam.x_min) * config.image_width as f64
}

/// Image row of height `z` (continuous); ground is the bottom edge.
pub fn row_of(config: &SceneConfig, z: f64) -> f64 {
    (1.0 - z / config.camera.z_max) * config.image_height as f64
}

fn fill_rect(config: &SceneConfig, pixels: &mut [u8], x0: f64, x1: f64, z0: f64, z1: f64, rgb: [u8; 3]) {
    let w = config.image_width as i64;
    let h = config.image_height as i64;
    let c0 = (column_of(config, x0).round() as i64).clamp(0, w);
    let c1 = (column_of(config, x1).round() as i64).clamp(0, w);
    let r0 = (row_of(config, z1).round() as i64).clamp(0, h);
    let r1 = (row_of(config, z0).round() as i64).clamp(0, h);
    if c1 <= c0 || r1 <= r0 {
        return;
    }
    let stride = 3 * w as usize;
    for row in r0 as usize..r1 as usize {
        let line = &mut pixels[row * stride + 3 * c0 as usize..row * stride + 3 * c1 as usize];
        for px in line.chunks_exact_mut(3) {
            px.copy_from_slice(&rgb);
        }
    }
}

pub(super) fn static_background(config: &SceneConfig) -> Vec<u8> {
    let n = config.image_width as usize * config.image_height as usize;
    let mut pixels: Vec<u8> = BACKGROUND_RGB.iter().copied().cycle().take(3 * n).collect();
    for (i, p) in config.tx_points.iter().enumerate() {
        let x = p.position.x;
        fill_rect(
            config,
            &mut pixels,
            x - MARKER_WIDTH_M / 2.0,
            x + MARKER_WIDTH_M / 2.0,
            0.0,
            TX_MARKER_HEIGHT_M,
            POINT_PALETTE[i % POINT_PALETTE.len()],
        );
    }
    let rx = config.rx_position.x;
    fill_rect(
        config,
        &mut pixels,
        rx - MARKER_WIDTH_M / 2.0,
        rx + MARKER_WIDTH_M / 2.0,
        0.0,
        RX_MARKER_HEIGHT_M,
        RX_RGB,
    );
    pixels
}

pub(super) fn draw_obstacle(config: &SceneConfig, x: Option<f64>, frame: &mut Frame) {
    if let Some(x) = x {
        let half = config.obstacle.width_m / 2.0;
        fill_rect(
            config,
            &mut frame.pixels,
            x - half,
            x + half,
            0.0,
            config.obstacle.height_m,
            OBSTACLE_RGB,
        );
    }
}
