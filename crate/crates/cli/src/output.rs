use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::{Common, Format};

#[derive(Serialize)]
struct Document<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    config: Resolved<'a, C>,
    result: &'a R,
}

#[derive(Serialize)]
struct Resolved<'a, C: Serialize> {
    #[serde(flatten)]
    common: &'a Common,
    #[serde(flatten)]
    command: &'a C,
}

pub struct Output {
    dir: PathBuf,
    format: Format,
}

impl Output {
    pub fn new(common: &Common) -> Result<Self> {
        fs::create_dir_all(&common.out)
            .with_context(|| format!("creating output directory {}", common.out.display()))?;
        Ok(Output {
            dir: common.out.clone(),
            format: common.format,
        })
    }

    pub fn wants_csv(&self) -> bool {
        self.format.csv()
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// `<command>.json` holding the resolved config and the full result.
    pub fn json<C: Serialize, R: Serialize>(
        &mut self,
        command: &str,
        common: &Common,
        config: &C,
        result: &R,
    ) -> Result<()> {
        if !self.format.json() {
            return Ok(());
        }
        let doc = Document {
            command,
            config: Resolved {
                common,
                command: config,
            },
            result,
        };
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        let p = self.path(&format!("{command}.json"));
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        if !self.format.csv() {
            return Ok(());
        }
        let p = self.path(name);
        let mut w =
            csv::Writer::from_path(&p).with_context(|| format!("writing {}", p.display()))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, body).with_context(|| format!("writing {}", p.display()))
    }
}

/// Six significant digits for human-facing summaries.
pub fn sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

/// Full-precision rendering for machine formats.
pub fn full(x: f64) -> String {
    format!("{x:?}")
}
