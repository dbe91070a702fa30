//! Plain-text checkpoints: a versioned header, layer widths, then row-major
//! weights (one matrix row per line) followed by the bias of each layer.
//!
//! ```text
//! sagin-agent 1 ddpg
//! net actor
//! sizes 3 4 2
//! 0.1 -0.2 0.3
//! ...
//! end
//! ```

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use super::ddpg::DdpgAgent;
use super::dqn::DqnAgent;
use super::mlp::Mlp;
use crate::error::{Error, Result};

const MAGIC: &str = "sagin-agent";
const VERSION: u32 = 1;

fn write_net(out: &mut String, name: &str, net: &Mlp) {
    let _ = writeln!(out, "net {name}");
    out.push_str("sizes");
    for s in &net.sizes {
        let _ = write!(out, " {s}");
    }
    out.push('\n');
    let mut off = 0;
    for w in net.sizes.windows(2) {
        let (i, o) = (w[0], w[1]);
        for r in 0..o {
            let row: Vec<String> = net.params[off + r * i..off + (r + 1) * i].iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        off += i * o;
        let bias: Vec<String> = net.params[off..off + o].iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&bias.join(" "));
        out.push('\n');
        off += o;
    }
    out.push_str("end\n");
}

pub fn save_nets(kind: &str, nets: &[(&str, &Mlp)]) -> String {
    let mut out = format!("{MAGIC} {VERSION} {kind}\n");
    for (name, net) in nets {
        write_net(&mut out, name, net);
    }
    out
}

fn bad(line: usize, msg: &str) -> Error {
    Error::Checkpoint(format!("line {line}: {msg}"))
}

/// Parses a checkpoint into its kind tag and named networks.
pub fn load_nets(text: &str) -> Result<(String, Vec<(String, Mlp)>)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let (ln, header) = lines.next().ok_or_else(|| bad(0, "empty checkpoint"))?;
    let mut h = header.split_whitespace();
    if h.next() != Some(MAGIC) {
        return Err(bad(ln, "missing header"));
    }
    let version: u32 = h.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad(ln, "missing version"))?;
    if version != VERSION {
        return Err(bad(ln, &format!("unsupported version {version}")));
    }
    let kind = h.next().ok_or_else(|| bad(ln, "missing kind"))?.to_string();

    let mut nets = Vec::new();
    while let Some((ln, line)) = lines.next() {
        let name = line.strip_prefix("net ").ok_or_else(|| bad(ln, "expected `net <name>`"))?.trim().to_string();
        let (ln, sizes_line) = lines.next().ok_or_else(|| bad(ln, "missing sizes"))?;
        let sizes: Vec<usize> = sizes_line
            .strip_prefix("sizes")
            .ok_or_else(|| bad(ln, "expected `sizes`"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(ln, "bad layer width")))
            .collect::<Result<_>>()?;
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(bad(ln, "invalid layer widths"));
        }
        let mut net = Mlp::zeros(&sizes);
        let mut params = Vec::with_capacity(net.num_params());
        loop {
            let (ln, l) = lines.next().ok_or_else(|| bad(ln, "missing `end`"))?;
            if l == "end" {
                break;
            }
            for t in l.split_whitespace() {
                params.push(t.parse::<f64>().map_err(|_| bad(ln, &format!("bad number `{t}`")))?);
            }
        }
        if params.len() != net.num_params() {
            return Err(Error::Checkpoint(format!("net {name}: expected {} parameters, found {}", net.num_params(), params.len())));
        }
        net.params = params;
        nets.push((name, net));
    }
    Ok((kind, nets))
}

fn take(nets: &mut Vec<(String, Mlp)>, name: &str, like: &Mlp) -> Result<Mlp> {
    let pos = nets.iter().position(|(n, _)| n == name).ok_or_else(|| Error::Checkpoint(format!("missing net {name}")))?;
    let net = nets.swap_remove(pos).1;
    if net.sizes != like.sizes {
        return Err(Error::Checkpoint(format!("net {name}: layer widths {:?} differ from {:?}", net.sizes, like.sizes)));
    }
    Ok(net)
}

fn expect_kind(kind: &str, want: &str) -> Result<()> {
    if kind == want {
        Ok(())
    } else {
        Err(Error::Checkpoint(format!("checkpoint holds a {kind} agent, expected {want}")))
    }
}

impl DdpgAgent {
    pub fn to_checkpoint(&self) -> String {
        save_nets(
            "ddpg",
            &[("actor", &self.actor), ("critic", &self.critic), ("target_actor", &self.target_actor), ("target_critic", &self.target_critic)],
        )
    }

    /// Replaces all four networks; optimizer moments and replay are left as they are.
    pub fn load_checkpoint(&mut self, text: &str) -> Result<()> {
        let (kind, mut nets) = load_nets(text)?;
        expect_kind(&kind, "ddpg")?;
        let actor = take(&mut nets, "actor", &self.actor)?;
        let critic = take(&mut nets, "critic", &self.critic)?;
        let ta = take(&mut nets, "target_actor", &self.target_actor)?;
        let tc = take(&mut nets, "target_critic", &self.target_critic)?;
        self.actor = actor;
        self.critic = critic;
        self.target_actor = ta;
        self.target_critic = tc;
        Ok(())
    }
}

impl DqnAgent {
    pub fn to_checkpoint(&self) -> String {
        save_nets("dqn", &[("q", &self.q), ("target", &self.target)])
    }

    pub fn load_checkpoint(&mut self, text: &str) -> Result<()> {
        let (kind, mut nets) = load_nets(text)?;
        expect_kind(&kind, "dqn")?;
        let q = take(&mut nets, "q", &self.q)?;
        let t = take(&mut nets, "target", &self.target)?;
        self.q = q;
        self.target = t;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::ddpg::DdpgParams;
    use super::super::dqn::DqnParams;
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn round_trip_is_exact() {
        let mut rng = stream(1, Stream::AgentInit);
        let p = DdpgParams { actor_lr: 1e-3, critic_lr: 1e-3, discount: 0.99, tau: 0.005, sigma: 0.2, batch: 8 };
        let mut a = DdpgAgent::new(3, 2, [5, 4], p, 10, &mut rng);
        a.actor.params[3] = 1.0 / 3.0;
        a.target_critic.params[0] = -2.5e-300;
        let text = a.to_checkpoint();
        let mut b = DdpgAgent::new(3, 2, [5, 4], p, 10, &mut rng);
        b.load_checkpoint(&text).unwrap();
        assert_eq!(a.actor, b.actor);
        assert_eq!(a.critic, b.critic);
        assert_eq!(a.target_actor, b.target_actor);
        assert_eq!(a.target_critic, b.target_critic);

        let mut q = DqnAgent::new(3, 4, [5, 4], DqnParams { lr: 1e-3, discount: 0.9, target_sync: 10, batch: 4 }, 10, &mut rng);
        assert!(q.load_checkpoint(&text).is_err());
        let t = q.to_checkpoint();
        let before = q.q.clone();
        q.q.params[0] += 1.0;
        q.load_checkpoint(&t).unwrap();
        assert_eq!(q.q, before);
    }

    #[test]
    fn rejects_malformed() {
        assert!(load_nets("").is_err());
        assert!(load_nets("other 1 ddpg\n").is_err());
        assert!(load_nets("sagin-agent 2 ddpg\n").is_err());
        assert!(load_nets("sagin-agent 1 x\nnet a\nsizes 1 1\n0.5\n").is_err());
        assert!(load_nets("sagin-agent 1 x\nnet a\nsizes 1 1\n0.5\nend\n").is_err());
        let (k, nets) = load_nets("sagin-agent 1 x\nnet a\nsizes 1 1\n0.5\n0.25\nend\n").unwrap();
        assert_eq!(k, "x");
        assert_eq!(nets[0].1.params, [0.5, 0.25]);
    }
}
