//! Line-delimited labeled-frame corpus.
//!
//! One JSON object per line:
//! `{"features":[f64; 41],"goal":"<plain goal text>","target":"<0..100 | <aci>>","source_episode":"<id>","frame_index":<n>}`

use std::io::{BufRead, Write};

use super::labeling::LabeledFrame;
use crate::{Error, Result};

pub fn write_frames<W: Write>(mut w: W, frames: &[LabeledFrame]) -> Result<()> {
    for f in frames {
        serde_json::to_writer(&mut w, f)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_frames<R: BufRead>(r: R) -> Result<Vec<LabeledFrame>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: LabeledFrame = serde_json::from_str(&line)
            .map_err(|e| Error::parse(format!("line {}: {e}", n + 1)))?;
        out.push(f);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critic_train::{Bin, ValueToken};

    #[test]
    fn round_trip_and_token_text() {
        let frames = vec![
            LabeledFrame {
                features: vec![0.1, -2.5],
                goal: "right the cup".into(),
                target: ValueToken::Progress(Bin::new(57).unwrap()),
                source_episode: "ep".into(),
                frame_index: 3,
            },
            LabeledFrame {
                features: vec![1.0],
                goal: "right the cup".into(),
                target: ValueToken::Anomaly,
                source_episode: "ep".into(),
                frame_index: 4,
            },
        ];
        let mut buf = Vec::new();
        write_frames(&mut buf, &frames).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("\"target\":\"57\""));
        assert!(text.contains("\"target\":\"<aci>\""));
        assert_eq!(read_frames(&buf[..]).unwrap(), frames);
    }
}
