//! Particle files: CSV with header `vx,vy,vz,w`, one particle per line.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensemble::{Ensemble, WeightedParticle};
use crate::error::Result;

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    vx: f64,
    vy: f64,
    vz: f64,
    w: f64,
}

pub fn write_particles<W: Write>(writer: W, ensemble: &Ensemble) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    for p in ensemble {
        let [vx, vy, vz] = p.velocity;
        out.serialize(Row {
            vx,
            vy,
            vz,
            w: p.weight,
        })?;
    }
    if ensemble.is_empty() {
        out.write_record(["vx", "vy", "vz", "w"])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_particles<R: Read>(reader: R) -> Result<Ensemble> {
    let mut input = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut particles = Vec::new();
    for row in input.deserialize::<Row>() {
        let row = row?;
        particles.push(WeightedParticle::new([row.vx, row.vy, row.vz], row.w)?);
    }
    Ok(Ensemble::new(particles))
}

pub fn write_particles_file(path: impl AsRef<Path>, ensemble: &Ensemble) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_particles(std::io::BufWriter::new(file), ensemble)
}

pub fn read_particles_file(path: impl AsRef<Path>) -> Result<Ensemble> {
    let file = std::fs::File::open(path)?;
    read_particles(std::io::BufReader::new(file))
}
