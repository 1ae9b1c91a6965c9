//! Frozen synthetic fixtures. Set `ZOEG_BLESS=1` to regenerate them.

use std::fs;
use std::path::{Path, PathBuf};

use zoeg::problems::pgm::{read_stream, write_stream};
use zoeg::problems::synth::{synth_stream, FrameStream, Motion, SynthSpec};

fn fixture_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn disk16() -> FrameStream {
    synth_stream(&SynthSpec::disk(16, 16, 8), 1, Motion::default(), 60.0, 7).unwrap()
}

fn drift16() -> FrameStream {
    let motion = Motion { dx: 0.08, dy: 0.04, dtheta: 0.0 };
    synth_stream(&SynthSpec::disk(16, 16, 8), 30, motion, 60.0, 7).unwrap()
}

fn check(name: &str, stream: &FrameStream) {
    let dir = fixture_dir(name);
    if std::env::var_os("ZOEG_BLESS").is_some() {
        if dir.exists() {
            fs::remove_dir_all(&dir).unwrap();
        }
        write_stream(&dir, stream).unwrap();
    }
    let fresh = tempfile::tempdir().unwrap();
    write_stream(fresh.path(), stream).unwrap();
    let mut names: Vec<_> = fs::read_dir(fresh.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for f in &names {
        let want = fs::read(dir.join(f)).unwrap_or_else(|e| panic!("{name}/{f:?}: {e}"));
        assert_eq!(fs::read(fresh.path().join(f)).unwrap(), want, "{name}/{f:?} differs from the frozen copy");
    }
    let (manifest, frames) = read_stream(&dir).unwrap();
    assert_eq!(frames.len(), stream.len());
    assert_eq!((manifest.width, manifest.height), (16, 16));
}

#[test]
fn disk_fixture_is_frozen() {
    check("disk16", &disk16());
}

#[test]
fn stream_fixture_is_frozen() {
    check("drift16", &drift16());
}
