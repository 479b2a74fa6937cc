//! The reduction of the bundled example, frozen. Every number in
//! `golden/example_blocks.json` was checked by hand: `F` is already
//! `[I 0]`, so `U = V = I`, the blocks are slices of `C` and `H'R⁻¹H`, and
//! at ε = 1e-3 `W = diag(ε, 1+ε)`, `C_ε = [0 1; 0 0]`, `Q_ε = (1 + 1/ε)I`,
//! `S_ε = ε(I + diag(1/ε, 1/(1+ε)))`.

use std::process::Command;

use serde_json::Value;

fn close(a: &Value, b: &Value, path: &str) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()), "{path}: {x} vs {y}");
        }
        (Value::Array(x), Value::Array(y)) => {
            assert_eq!(x.len(), y.len(), "{path}: length");
            for (i, (p, q)) in x.iter().zip(y).enumerate() {
                close(p, q, &format!("{path}[{i}]"));
            }
        }
        (Value::Object(x), Value::Object(y)) => {
            let mut kx: Vec<_> = x.keys().collect();
            let mut ky: Vec<_> = y.keys().collect();
            kx.sort();
            ky.sort();
            assert_eq!(kx, ky, "{path}: keys");
            for k in x.keys() {
                close(&x[k], &y[k], &format!("{path}.{k}"));
            }
        }
        _ => assert_eq!(a, b, "{path}"),
    }
}

#[test]
fn example_blocks_match_golden() {
    let out = Command::new(env!("CARGO_BIN_EXE_minimax-dae"))
        .args(["reduce", "--dump-blocks", "--eps", "1e-3"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let got: Value = serde_json::from_slice(&out.stdout).unwrap();
    let want: Value = serde_json::from_str(include_str!("golden/example_blocks.json")).unwrap();
    close(&got, &want, "$");
}
