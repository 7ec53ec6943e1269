//! Plain-text instance files: one substrate plus one request stream.
//!
//! ```text
//! # comment
//! substrate <domain_count>
//! node <domain> <cpu_capacity> <cpu_unit_price>
//! link <a> <b> <bw_capacity> <bw_unit_price>
//! horizon <time>
//! vnr <id> <arrival_time> <lifetime>
//! vnode <cpu_demand>
//! vlink <a> <b> <bw_demand>
//! ```
//!
//! Nodes and links are numbered in file order. `vnode` and `vlink` lines
//! belong to the closest preceding `vnr`. Times are written with enough
//! digits to read back exactly.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use lbhga_core::model::{DomainId, LinkSpec, NodeId, NodeSpec, SubstrateNetwork, VirtualLink, VirtualNetworkRequest, VnrId};
use lbhga_core::topology::{generate_substrate, generate_vnr_stream};

use crate::config::Config;
use crate::{write_atomic, CliError};

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub substrate: SubstrateNetwork,
    pub horizon: f64,
    pub stream: Vec<VirtualNetworkRequest>,
}

impl Instance {
    pub fn generate(cfg: &Config, seed: u64) -> Result<Self, CliError> {
        let substrate = generate_substrate(&cfg.substrate, seed).map_err(CliError::Config)?;
        let stream = generate_vnr_stream(&cfg.stream, seed).map_err(CliError::Config)?;
        Ok(Self { substrate, horizon: cfg.stream.horizon, stream })
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# lbhga instance\n");
        let net = &self.substrate;
        writeln!(out, "substrate {}", net.domain_count()).unwrap();
        for n in net.nodes() {
            writeln!(out, "node {} {} {}", n.domain.0, n.cpu_capacity, n.cpu_unit_price).unwrap();
        }
        for l in net.links() {
            writeln!(out, "link {} {} {} {}", l.a.0, l.b.0, l.bw_capacity, l.bw_unit_price).unwrap();
        }
        writeln!(out, "horizon {}", self.horizon).unwrap();
        for v in &self.stream {
            writeln!(out, "vnr {} {} {}", v.id.0, v.arrival_time, v.lifetime).unwrap();
            for cpu in &v.cpu_demands {
                writeln!(out, "vnode {cpu}").unwrap();
            }
            for l in &v.links {
                writeln!(out, "vlink {} {} {}", l.a, l.b, l.bw).unwrap();
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut domain_count = None;
        let mut nodes = Vec::new();
        let mut links = Vec::new();
        let mut horizon = None;
        let mut stream: Vec<VirtualNetworkRequest> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut f = Fields { line: i + 1, parts: line.split_whitespace() };
            let tag = f.parts.next().unwrap();
            match tag {
                "substrate" => domain_count = Some(f.next("domain count")?),
                "node" => nodes.push(NodeSpec {
                    domain: DomainId(f.next("domain")?),
                    cpu_capacity: f.next("cpu capacity")?,
                    cpu_unit_price: f.next("cpu unit price")?,
                }),
                "link" => links.push(LinkSpec {
                    a: NodeId(f.next("endpoint")?),
                    b: NodeId(f.next("endpoint")?),
                    bw_capacity: f.next("bandwidth capacity")?,
                    bw_unit_price: f.next("bandwidth unit price")?,
                }),
                "horizon" => horizon = Some(f.next("horizon")?),
                "vnr" => stream.push(VirtualNetworkRequest {
                    id: VnrId(f.next("request id")?),
                    arrival_time: f.next("arrival time")?,
                    lifetime: f.next("lifetime")?,
                    cpu_demands: Vec::new(),
                    links: Vec::new(),
                }),
                "vnode" => {
                    let cpu = f.next("cpu demand")?;
                    f.current(&mut stream)?.cpu_demands.push(cpu);
                }
                "vlink" => {
                    let link = VirtualLink { a: f.next("endpoint")?, b: f.next("endpoint")?, bw: f.next("bandwidth demand")? };
                    f.current(&mut stream)?.links.push(link);
                }
                other => return Err(ParseError { line: i + 1, reason: format!("unknown record `{other}`") }),
            }
            f.finish()?;
        }

        let whole = |reason: String| ParseError { line: 0, reason };
        let domain_count = domain_count.ok_or_else(|| whole("missing `substrate` record".into()))?;
        let horizon = horizon.ok_or_else(|| whole("missing `horizon` record".into()))?;
        let substrate = SubstrateNetwork::new(domain_count, &nodes, &links).map_err(|e| whole(e.to_string()))?;
        for v in &stream {
            v.validate().map_err(|e| whole(format!("request {}: {e}", v.id)))?;
        }
        Ok(Self { substrate, horizon, stream })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
        Self::parse(&text).map_err(|source| CliError::Instance { path: path.to_owned(), source })
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        write_atomic(path, self.render().as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {reason}")]
pub struct ParseError {
    /// 1-based; 0 when the problem concerns the file as a whole.
    pub line: usize,
    pub reason: String,
}

struct Fields<'a> {
    line: usize,
    parts: std::str::SplitWhitespace<'a>,
}

impl Fields<'_> {
    fn next<T: FromStr>(&mut self, what: &str) -> Result<T, ParseError> {
        let raw = self
            .parts
            .next()
            .ok_or_else(|| ParseError { line: self.line, reason: format!("missing {what}") })?;
        raw.parse()
            .map_err(|_| ParseError { line: self.line, reason: format!("bad {what} `{raw}`") })
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        match self.parts.next() {
            Some(extra) => Err(ParseError { line: self.line, reason: format!("unexpected `{extra}`") }),
            None => Ok(()),
        }
    }

    fn current<'s>(&self, stream: &'s mut [VirtualNetworkRequest]) -> Result<&'s mut VirtualNetworkRequest, ParseError> {
        stream
            .last_mut()
            .ok_or_else(|| ParseError { line: self.line, reason: "record outside any `vnr`".into() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
substrate 1
node 0 10 2
node 0 12 3
link 0 1 50 4
horizon 300
vnr 0 1.5 100
vnode 3
vnode 4
vlink 0 1 2
";

    #[test]
    fn parses_and_renders_back() {
        let inst = Instance::parse(SMALL).unwrap();
        assert_eq!(inst.substrate.node_count(), 2);
        assert_eq!(inst.stream[0].cpu_demands, vec![3, 4]);
        assert_eq!(inst.horizon, 300.0);
        assert_eq!(Instance::parse(&inst.render()).unwrap(), inst);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = Instance::parse("substrate 1\nnode 0 ten 2\n").unwrap_err();
        assert_eq!(err.line, 2);
        let err = Instance::parse("substrate 1\nvnode 3\n").unwrap_err();
        assert_eq!(err.line, 2);
        let err = Instance::parse("substrate 1\nhorizon 5 6\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(Instance::parse("substrate 1\n").is_err());
    }
}
