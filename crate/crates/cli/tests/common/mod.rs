#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use eurcut::applications::{build_family_bases, MeasurementFamily};
use eurcut::quantum::PureState;
use eurcut_cli::spec::SpecFile;
use jsonschema::{Draft, JSONSchema};
use serde_json::Value;

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Output {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", self.stdout))
    }
}

pub fn eurcut<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    let out = Command::new(env!("CARGO_BIN_EXE_eurcut"))
        .args(args)
        .output()
        .expect("binary runs");
    Output {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

pub fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

fn load_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Validation errors of `value` against `schemas/<name>.schema.json`.
pub fn schema_errors(name: &str, value: &Value) -> Vec<String> {
    let dir = schema_dir();
    let schema = load_json(&dir.join(format!("{name}.schema.json")));
    let common = load_json(&dir.join("common.schema.json"));
    let compiled = JSONSchema::options()
        .with_draft(Draft::Draft7)
        .with_document("https://eurcut.example/schemas/common.schema.json".into(), common)
        .compile(&schema)
        .expect("schema compiles");
    let errors = match compiled.validate(value) {
        Ok(()) => Vec::new(),
        Err(errs) => errs.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    errors
}

pub fn assert_valid(name: &str, value: &Value) {
    let errors = schema_errors(name, value);
    assert!(errors.is_empty(), "{name}: {errors:#?}");
}

pub fn write_spec(dir: &Path, file: &str, spec: &SpecFile) -> PathBuf {
    let path = dir.join(file);
    std::fs::write(&path, spec.to_json()).unwrap();
    path
}

pub fn qubit_xz() -> SpecFile {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = vec![PureState::basis(2, 0), PureState::basis(2, 1)];
    let x = vec![
        PureState::from_real(&[s, s]).unwrap(),
        PureState::from_real(&[s, -s]).unwrap(),
    ];
    SpecFile::from_bases(&[z, x], Some("qubit Z and X".into()))
}

pub fn family_spec(family: MeasurementFamily, point: &[f64]) -> SpecFile {
    SpecFile::from_bases(&build_family_bases(family, point).unwrap(), None)
}

pub fn num(v: &Value, path: &str) -> f64 {
    v.pointer(path)
        .and_then(Value::as_f64)
        .unwrap_or_else(|| panic!("missing number at {path}"))
}
