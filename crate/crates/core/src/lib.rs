//! Multi-view RGBD fruit size measurement.
//!
//! Stages, in pipeline order:
//!
//! 1. [`geometry`]: rigid transforms, pinhole (de)projection, depth alignment, extrinsic chains.
//! 2. [`maskops`]: RLE masks, kernel edge extraction, extreme points, median edge depth.
//! 3. [`sizing`]: metric height/width, circle fit, fill ratio.
//! 4. [`fusion`]: world-frame localization, radius deduplication, best-view selection.
//! 5. [`evaluation`]: RMSE and accuracy against ground truth.
//! 6. [`simulate`]: ray-cast synthetic captures with known fruit geometry.
//! 7. [`pipeline`]: file I/O and the batch commands behind the CLI.

pub mod evaluation;
pub mod formats;
pub mod fusion;
pub mod geometry;
pub mod maskops;
pub mod pipeline;
pub mod simulate;
pub mod sizing;
