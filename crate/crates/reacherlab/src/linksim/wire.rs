//! Wire codecs: the 257-byte binary status-packet format and the textual
//! command lines understood by the controller.
//!
//! Status layout (little-endian):
//!
//! ```text
//! magic "URSP" (4) | version u8 = 1 | seq u32 | timestamp_ns u64 |
//! q [6 x f64] | qd [6 x f64] | qdd_target [6 x f64] |
//! torque_target [6 x f64] | current [6 x f64]
//! ```
//!
//! Commands are UTF-8 lines with numbers printed to 9 significant digits:
//!
//! ```text
//! speedj([v0,v1,v2,v3,v4,v5],a=<accel>,t=<validity>)\n
//! servoj([q0,q1,q2,q3,q4,q5],t=<validity>,lookahead_time=<s>,gain=<g>)\n
//! stopj()\n
//! ```

use thiserror::Error;

use crate::timebase::{Duration, Instant};
use crate::ursim::{ActuationCommand, CommandKind, StatusPacket};
use crate::util::{sig9, Vec6};

pub const STATUS_MAGIC: [u8; 4] = *b"URSP";
pub const STATUS_VERSION: u8 = 1;
/// 4 + 1 + 4 + 8 + 5 * 48
pub const STATUS_LEN: usize = 257;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("status packet length {got}, expected {STATUS_LEN}")]
    Length { got: usize },
    #[error("bad status magic {got:?}")]
    Magic { got: [u8; 4] },
    #[error("unsupported status version {got}")]
    Version { got: u8 },
    #[error("malformed command line: {0}")]
    Command(String),
}

pub fn encode_status(pkt: &StatusPacket) -> Vec<u8> {
    let mut out = Vec::with_capacity(STATUS_LEN);
    out.extend_from_slice(&STATUS_MAGIC);
    out.push(STATUS_VERSION);
    out.extend_from_slice(&pkt.seq.to_le_bytes());
    out.extend_from_slice(&pkt.timestamp.as_nanos().to_le_bytes());
    for arr in [&pkt.q, &pkt.qd, &pkt.qdd_target, &pkt.torque_target, &pkt.current] {
        for v in arr {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    debug_assert_eq!(out.len(), STATUS_LEN);
    out
}

pub fn decode_status(data: &[u8]) -> Result<StatusPacket, DecodeError> {
    if data.len() != STATUS_LEN {
        return Err(DecodeError::Length { got: data.len() });
    }
    let magic: [u8; 4] = data[0..4].try_into().unwrap();
    if magic != STATUS_MAGIC {
        return Err(DecodeError::Magic { got: magic });
    }
    if data[4] != STATUS_VERSION {
        return Err(DecodeError::Version { got: data[4] });
    }
    let seq = u32::from_le_bytes(data[5..9].try_into().unwrap());
    let ts = u64::from_le_bytes(data[9..17].try_into().unwrap());
    let mut arrays = [[0.0f64; 6]; 5];
    let mut off = 17;
    for arr in arrays.iter_mut() {
        for v in arr.iter_mut() {
            *v = f64::from_le_bytes(data[off..off + 8].try_into().unwrap());
            off += 8;
        }
    }
    Ok(StatusPacket {
        seq,
        timestamp: Instant::from_nanos(ts),
        q: arrays[0],
        qd: arrays[1],
        qdd_target: arrays[2],
        torque_target: arrays[3],
        current: arrays[4],
    })
}

fn fmt_vec6(v: &Vec6) -> String {
    let parts: Vec<String> = v.iter().map(|x| sig9(*x)).collect();
    format!("[{}]", parts.join(","))
}

pub fn encode_command(cmd: &ActuationCommand) -> String {
    match cmd.kind {
        CommandKind::SpeedJ => format!(
            "speedj({},a={},t={})\n",
            fmt_vec6(&cmd.values),
            sig9(cmd.accel_limit),
            sig9(cmd.validity.as_secs_f64()),
        ),
        CommandKind::ServoJ => format!(
            "servoj({},t={},lookahead_time={},gain={})\n",
            fmt_vec6(&cmd.values),
            sig9(cmd.validity.as_secs_f64()),
            sig9(cmd.lookahead.as_secs_f64()),
            sig9(cmd.gain),
        ),
        CommandKind::Stop => "stopj()\n".to_string(),
    }
}

fn parse_vec6(s: &str) -> Result<Vec6, DecodeError> {
    let inner = s
        .strip_prefix('[')
        .and_then(|x| x.strip_suffix(']'))
        .ok_or_else(|| DecodeError::Command(format!("expected [..] vector, got {s:?}")))?;
    let parts: Vec<&str> = inner.split(',').collect();
    if parts.len() != 6 {
        return Err(DecodeError::Command(format!("expected 6 elements, got {}", parts.len())));
    }
    let mut out = [0.0; 6];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p
            .trim()
            .parse()
            .map_err(|_| DecodeError::Command(format!("bad number {p:?}")))?;
    }
    Ok(out)
}

fn parse_named_f64(part: &str, key: &str) -> Result<f64, DecodeError> {
    let val = part
        .strip_prefix(key)
        .and_then(|x| x.strip_prefix('='))
        .ok_or_else(|| DecodeError::Command(format!("expected {key}=<num>, got {part:?}")))?;
    val.parse().map_err(|_| DecodeError::Command(format!("bad number in {part:?}")))
}

/// Split `vec,k1=v1,k2=v2,...` at top level (commas inside `[...]` are
/// part of the vector).
fn split_args(body: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in body.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(&body[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&body[start..]);
    parts
}

pub fn parse_command(line: &str) -> Result<ActuationCommand, DecodeError> {
    let line = line.trim_end_matches('\n');
    if line == "stopj()" {
        return Ok(ActuationCommand::stop());
    }
    let (name, rest) = line
        .split_once('(')
        .ok_or_else(|| DecodeError::Command(format!("no opening paren in {line:?}")))?;
    let body = rest
        .strip_suffix(')')
        .ok_or_else(|| DecodeError::Command(format!("no closing paren in {line:?}")))?;
    let args = split_args(body);
    match name {
        "speedj" => {
            if args.len() != 3 {
                return Err(DecodeError::Command(format!("speedj takes 3 args, got {}", args.len())));
            }
            let values = parse_vec6(args[0])?;
            let accel = parse_named_f64(args[1], "a")?;
            let t = parse_named_f64(args[2], "t")?;
            Ok(ActuationCommand::speedj(values, accel, Duration::from_secs_f64(t)))
        }
        "servoj" => {
            if args.len() != 4 {
                return Err(DecodeError::Command(format!("servoj takes 4 args, got {}", args.len())));
            }
            let values = parse_vec6(args[0])?;
            let t = parse_named_f64(args[1], "t")?;
            let lookahead = parse_named_f64(args[2], "lookahead_time")?;
            let gain = parse_named_f64(args[3], "gain")?;
            Ok(ActuationCommand::servoj(
                values,
                Duration::from_secs_f64(t),
                Duration::from_secs_f64(lookahead),
                gain,
            ))
        }
        other => Err(DecodeError::Command(format!("unknown command {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_packet() -> StatusPacket {
        StatusPacket {
            seq: 42,
            timestamp: Instant::from_millis(336),
            q: [0.1, -0.2, 0.3, 0.0, 1.0, -1.5],
            qd: [0.01, 0.02, -0.03, 0.0, 0.0, 0.0],
            qdd_target: [1.4, -0.35, 0.0, 0.0, 0.0, 0.0],
            torque_target: [1.4, -0.35, 0.0, 0.0, 0.0, 0.0],
            current: [0.7, -0.1, 0.0, 0.0, 0.0, 0.0],
        }
    }

    #[test]
    fn encoded_length_is_257() {
        assert_eq!(encode_status(&sample_packet()).len(), 257);
        assert_eq!(STATUS_LEN, 4 + 1 + 4 + 8 + 5 * 48);
    }

    #[test]
    fn zero_packet_encodes_zero_payload() {
        let pkt = StatusPacket::default();
        let bytes = encode_status(&pkt);
        assert!(bytes[5..].iter().all(|&b| b == 0));
    }

    #[test]
    fn status_round_trip() {
        let pkt = sample_packet();
        assert_eq!(decode_status(&encode_status(&pkt)).unwrap(), pkt);
    }

    #[test]
    fn decode_rejects_truncated_input() {
        let bytes = encode_status(&sample_packet());
        assert_eq!(decode_status(&bytes[..200]), Err(DecodeError::Length { got: 200 }));
    }

    #[test]
    fn decode_rejects_bad_magic() {
        let mut bytes = encode_status(&sample_packet());
        bytes[0] = b'X';
        assert!(matches!(decode_status(&bytes), Err(DecodeError::Magic { .. })));
    }

    #[test]
    fn decode_rejects_bad_version() {
        let mut bytes = encode_status(&sample_packet());
        bytes[4] = 9;
        assert_eq!(decode_status(&bytes), Err(DecodeError::Version { got: 9 }));
    }

    #[test]
    fn reencode_matches_original_bytes() {
        let bytes = encode_status(&sample_packet());
        let decoded = decode_status(&bytes).unwrap();
        assert_eq!(encode_status(&decoded), bytes);
    }

    #[test]
    fn speedj_line_round_trips() {
        let cmd = ActuationCommand::speedj(
            [0.3, -0.123456789, 0.0, 0.0, 0.0, 0.0],
            1.4,
            Duration::from_millis(16),
        );
        let line = encode_command(&cmd);
        assert!(line.starts_with("speedj(["));
        assert!(line.ends_with(")\n"));
        let back = parse_command(&line).unwrap();
        assert_eq!(back.kind, CommandKind::SpeedJ);
        for i in 0..6 {
            assert!((back.values[i] - cmd.values[i]).abs() < 1e-9);
        }
        assert!((back.accel_limit - 1.4).abs() < 1e-9);
        assert!((back.validity.as_secs_f64() - 0.016).abs() < 1e-9);
    }

    #[test]
    fn servoj_line_round_trips() {
        let cmd = ActuationCommand::servoj(
            [0.5016, -0.5016, 0.0, 0.0, 0.0, 0.0],
            Duration::from_millis(16),
            Duration::from_millis(100),
            300.0,
        );
        let back = parse_command(&encode_command(&cmd)).unwrap();
        assert_eq!(back.kind, CommandKind::ServoJ);
        assert!((back.gain - 300.0).abs() < 1e-9);
        assert!((back.lookahead.as_secs_f64() - 0.1).abs() < 1e-9);
    }

    #[test]
    fn stopj_line_round_trips() {
        let line = encode_command(&ActuationCommand::stop());
        assert_eq!(line, "stopj()\n");
        assert_eq!(parse_command(&line).unwrap().kind, CommandKind::Stop);
    }

    #[test]
    fn garbage_command_is_rejected() {
        assert!(parse_command("movej([0,0,0,0,0,0])\n").is_err());
        assert!(parse_command("speedj([1,2,3],a=1,t=1)\n").is_err());
    }
}
