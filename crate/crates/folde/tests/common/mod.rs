#![allow(dead_code)]

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::{Path, PathBuf};

use folde::formats::{save_dataset, save_embeddings, save_logprobs};
use folde_core::sim::{synth_landscape, Landscape, LandscapeConfig};

pub fn small_landscape(seed: u64) -> Landscape {
    synth_landscape(&LandscapeConfig {
        length: 12,
        n_variants: 228,
        embed_dim: 16,
        latent_dim: 8,
        seed,
        ..LandscapeConfig::default()
    })
    .unwrap()
}

pub struct Fixture {
    pub landscape: Landscape,
    pub dataset: PathBuf,
    pub embeddings: PathBuf,
    pub logprobs: PathBuf,
}

pub fn write_fixture(dir: &Path, seed: u64) -> Fixture {
    let landscape = small_landscape(seed);
    let f = Fixture {
        dataset: dir.join("dataset.tsv"),
        embeddings: dir.join("embeddings.flde"),
        logprobs: dir.join("logprobs.tsv"),
        landscape,
    };
    save_dataset(&f.dataset, &f.landscape.dataset).unwrap();
    save_embeddings(&f.embeddings, &f.landscape.embeddings).unwrap();
    save_logprobs(&f.logprobs, &f.landscape.logprobs).unwrap();
    f
}

/// Minimal HTTP/1.1 client: returns status code and body.
pub fn http(addr: SocketAddr, method: &str, path: &str, body: &str) -> (u16, String) {
    let mut s = TcpStream::connect(addr).unwrap();
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut raw = String::new();
    s.read_to_string(&mut raw).unwrap();
    let status = raw.split_whitespace().nth(1).unwrap().parse().unwrap();
    let body = raw.split_once("\r\n\r\n").map(|(_, b)| b.to_string()).unwrap_or_default();
    (status, body)
}
