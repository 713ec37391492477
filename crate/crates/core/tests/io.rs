//! Matrix files on disk.

use ncpnorm::algebra::ComplexMatrix;
use ncpnorm::io::{read_family, MatrixFile};
use ncpnorm::Error;
use num_complex::Complex64;

#[test]
fn family_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("family.json");
    let family = vec![
        ComplexMatrix::from_fn(3, |i, j| Complex64::new(i as f64 - 1.0, 0.25 * j as f64)),
        ComplexMatrix::unit(3, 2, 0),
    ];
    std::fs::write(&path, MatrixFile::from_family(&family).to_json()).unwrap();
    assert_eq!(read_family(&path).unwrap(), family);
    let raw: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(raw["dim"], 3);
    assert_eq!(raw["matrices"][0][1], serde_json::json!([-1.0, 0.25]));
    assert!(raw.get("images").is_none());
}

#[test]
fn hand_written_file_with_images() {
    let text = r#"{"dim": 1, "matrices": [[[2, 0]]], "images": [[[0, 0], [0, 0], [0, 0], [2, 0]]], "image_dim": 2}"#;
    let file = MatrixFile::parse(text).unwrap();
    assert_eq!(file.family().unwrap(), vec![ComplexMatrix::identity(1).scale_real(2.0)]);
    let images = file.image_family().unwrap().unwrap();
    assert_eq!(images[0], ComplexMatrix::unit(2, 1, 1).scale_real(2.0));
}

#[test]
fn bad_files_are_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(read_family(&dir.path().join("absent.json")), Err(Error::Parse(_))));
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"dim": 2, "matrices": [[[1, 0]]]}"#).unwrap();
    assert!(matches!(read_family(&path), Err(Error::Parse(_))));
    std::fs::write(&path, r#"{"dim": 1, "matrices": [[["x", 0]]]}"#).unwrap();
    assert!(matches!(read_family(&path), Err(Error::Parse(_))));
}
