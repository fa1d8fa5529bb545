#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use regge_ics::config::RunConfig;
use regge_ics::shell_model::{energy_grid, generate_dataset, PadeHeader, ShellModelParams};
use regge_ics::workflow::load_config;

/// Writes `input/` for the given model and grid plus an `INPUT` file,
/// returning the loaded config.
pub fn dataset(root: &Path, params: &ShellModelParams, lo: f64, hi: f64, step: f64, extra: &str) -> RunConfig {
    generate_dataset(params, &energy_grid(lo, hi, step), 30, &PadeHeader::default(), &root.join("input")).unwrap();
    let text = format!(
        "first_run: yes\nfollow_by_hand: no\nelastic_channel: yes\nreduced_mass: {}\ne_min: {lo}\ne_max: {hi}\n\
         x_min: 0\nx_max: 20\ny_min: 0\ny_max: 5\ndata_dir: input\noutput_dir: output\n{extra}",
        params.mu
    );
    fs::write(root.join("INPUT"), text).unwrap();
    load_config(&root.join("INPUT")).unwrap()
}

/// Small BOUND set: 25–45 meV, where the resonance pole is well resolved.
pub fn bound_small(root: &Path, extra: &str) -> RunConfig {
    dataset(root, &ShellModelParams::bound_example(), 25.0, 45.0, 5.0, extra)
}

pub fn output_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

/// Name → bytes of every file in `dir`.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    output_files(dir)
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

/// One HTTP/1.1 request over a fresh connection; returns status and body.
pub fn http(addr: std::net::SocketAddr, method: &str, path: &str, body: Option<&str>) -> (u16, String) {
    use std::io::{Read, Write};
    let mut s = std::net::TcpStream::connect(addr).unwrap();
    let body = body.unwrap_or("");
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut raw = Vec::new();
    s.read_to_end(&mut raw).unwrap();
    let text = String::from_utf8(raw).unwrap();
    let (head, rest) = text.split_once("\r\n\r\n").expect("complete response");
    let status = head.split_whitespace().nth(1).unwrap().parse().unwrap();
    let chunked = head.to_ascii_lowercase().contains("transfer-encoding: chunked");
    (status, if chunked { dechunk(rest) } else { rest.to_string() })
}

fn dechunk(mut s: &str) -> String {
    let mut out = String::new();
    loop {
        let (size, rest) = s.split_once("\r\n").unwrap();
        let n = usize::from_str_radix(size.trim(), 16).unwrap();
        if n == 0 {
            return out;
        }
        out.push_str(&rest[..n]);
        s = &rest[n + 2..];
    }
}
