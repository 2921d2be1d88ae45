//! Parameterized sound-loop library: tempo, beats per loop and pitch bend
//! applied to one base sample.

mod levels;
mod library;
mod render;
mod sample;
mod wav;

pub use levels::{AcousticParams, LevelMapping, BPL, BPM, PITCH};
pub use library::{generate_library, render_wav, sha256_hex, sound_file_name, LibraryManifest, SoundEntry, MANIFEST_FILE};
pub use render::{
    apply_bend, assemble_loop, beat_offset, bend_rates, interpolate, loop_len, normalize, quantize, render_loop,
    RenderConfig,
};
pub use sample::BaseSample;
pub use wav::{decode_wav, encode_wav};
