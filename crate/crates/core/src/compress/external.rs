//! Subprocess adapters for external compressors.

use std::fs;
use std::process::{Command, Stdio};
use std::sync::OnceLock;
use std::time::Instant;

use super::{Codec, CodecId, CodecKind, CompressError, CompressionResult};
use crate::imageio::BinaryMatrix;

const INPUT: &str = "{input}";
const OUTPUT: &str = "{output}";

/// Shell command template with `{input}` and `{output}` placeholders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExternalCodecSpec {
    pub name: String,
    pub command_template: String,
}

impl ExternalCodecSpec {
    pub fn new(
        name: impl Into<String>,
        command_template: impl Into<String>,
    ) -> Result<Self, CompressError> {
        let name = name.into();
        let command_template = command_template.into();
        if name.is_empty() || name.contains(',') {
            return Err(CompressError::Template(format!("bad codec name '{name}'")));
        }
        if !command_template.contains(INPUT) || !command_template.contains(OUTPUT) {
            return Err(CompressError::Template(format!(
                "'{command_template}' must contain both {INPUT} and {OUTPUT}"
            )));
        }
        Ok(ExternalCodecSpec { name, command_template })
    }

    /// Templates for the stream compressors commonly benchmarked on image data.
    /// `ac`, `ppmd` and `paq8` depend on tools rarely installed system-wide;
    /// override them when your binaries use different flags.
    pub fn defaults() -> Vec<ExternalCodecSpec> {
        [
            ("gzip", "gzip -9 -n -c {input} > {output}"),
            ("bzip2", "bzip2 -9 -c {input} > {output}"),
            ("xz", "xz -9 -e -c {input} > {output}"),
            ("lzma", "xz --format=lzma -9 -e -c {input} > {output}"),
            ("ac", "AC {input} > /dev/null && mv {input}.co {output}"),
            (
                "ppmd",
                "7z a -t7z -m0=PPMd -mx=9 -bd {output}.7z {input} > /dev/null && mv {output}.7z {output}",
            ),
            ("paq8", "paq8kx_v7 -8 {output}.paq {input} > /dev/null && mv {output}.paq* {output}"),
        ]
        .into_iter()
        .map(|(n, t)| ExternalCodecSpec::new(n, t).expect("valid default template"))
        .collect()
    }

    fn program(&self) -> &str {
        self.command_template.split_whitespace().next().unwrap_or("")
    }
}

pub struct ExternalCodec {
    spec: ExternalCodecSpec,
    id: CodecId,
    available: OnceLock<bool>,
}

impl ExternalCodec {
    pub fn new(spec: ExternalCodecSpec) -> Self {
        let id = CodecId::new(spec.name.clone(), CodecKind::External);
        ExternalCodec { spec, id, available: OnceLock::new() }
    }

    pub fn spec(&self) -> &ExternalCodecSpec {
        &self.spec
    }

    fn run(&self, data: &[u8]) -> Result<(u64, Option<u64>), CompressError> {
        if !self.is_available() {
            return Err(CompressError::Unavailable(self.spec.name.clone()));
        }
        let dir = tempfile::tempdir()?;
        let input = dir.path().join("input.bin");
        let output = dir.path().join("output.bin");
        let stderr_path = dir.path().join("stderr.txt");
        fs::write(&input, data)?;
        let cmd = self
            .spec
            .command_template
            .replace(INPUT, &shell_quote(&input.to_string_lossy()))
            .replace(OUTPUT, &shell_quote(&output.to_string_lossy()));

        let child = Command::new("sh")
            .arg("-c")
            .arg(&cmd)
            .current_dir(dir.path())
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(fs::File::create(&stderr_path)?)
            .spawn()?;
        let (success, peak) = wait_with_rusage(child)?;
        if !success {
            let message = fs::read_to_string(&stderr_path).unwrap_or_default();
            return Err(CompressError::External {
                name: self.spec.name.clone(),
                message: message.trim().to_string(),
            });
        }
        let size = fs::metadata(&output)
            .map_err(|e| CompressError::External {
                name: self.spec.name.clone(),
                message: format!("no output file: {e}"),
            })?
            .len();
        Ok((size, peak))
    }
}

#[cfg(unix)]
fn wait_with_rusage(child: std::process::Child) -> std::io::Result<(bool, Option<u64>)> {
    let pid = child.id() as libc::pid_t;
    let mut status: libc::c_int = 0;
    // SAFETY: rusage is plain data; wait4 fills it for our own child pid.
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    let rc = unsafe { libc::wait4(pid, &mut status, 0, &mut usage) };
    if rc < 0 {
        return Err(std::io::Error::last_os_error());
    }
    // the child is reaped; `Child` must not wait again
    drop(child);
    let ok = libc::WIFEXITED(status) && libc::WEXITSTATUS(status) == 0;
    Ok((ok, Some(usage.ru_maxrss as u64 * 1024)))
}

#[cfg(not(unix))]
fn wait_with_rusage(mut child: std::process::Child) -> std::io::Result<(bool, Option<u64>)> {
    Ok((child.wait()?.success(), None))
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

impl Codec for ExternalCodec {
    fn id(&self) -> &CodecId {
        &self.id
    }

    fn version(&self) -> &str {
        &self.spec.command_template
    }

    fn is_available(&self) -> bool {
        *self.available.get_or_init(|| {
            let program = self.spec.program();
            !program.is_empty()
                && Command::new("sh")
                    .arg("-c")
                    .arg(format!("command -v {} > /dev/null", shell_quote(program)))
                    .stdin(Stdio::null())
                    .stdout(Stdio::null())
                    .stderr(Stdio::null())
                    .status()
                    .map(|s| s.success())
                    .unwrap_or(false)
        })
    }

    /// Compresses the matrix as `0`/`1` ASCII characters, row-major, no separators.
    fn compressed_bits(&self, x: &BinaryMatrix) -> Result<u64, CompressError> {
        let (bytes, _) = self.run(&x.to_ascii(false))?;
        Ok(8 * bytes)
    }

    fn compress_bytes(&self, data: &[u8]) -> Result<CompressionResult, CompressError> {
        let start = Instant::now();
        let (bytes, peak) = self.run(data)?;
        Ok(CompressionResult {
            codec: self.id.clone(),
            input_bits: 8 * data.len() as u64,
            output_bits: 8 * bytes,
            wall_time: start.elapsed(),
            peak_memory: peak,
        })
    }
}
