//! Classification of simple commands into the families detection reasons
//! about: container builds/pulls/pushes and Python package installations
//! via pip, conda, or the system package manager.

use super::tokenizer::SimpleCommand;

/// Command families relevant to cache and image analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CommandClass {
    /// `docker build` / `docker image build` / `docker buildx build`.
    DockerBuild {
        cache_from: bool,
        /// Values passed to `-t`/`--tag`: images this workflow builds.
        tags: Vec<String>,
    },
    /// `docker buildx bake`: cache behavior lives in the bake file, out of
    /// reach of workflow-level analysis.
    DockerBuildxBake,
    DockerPull {
        image_index: usize,
    },
    DockerPush {
        image_index: usize,
    },
    /// pip/pip3 (incl. `python -m pip`) `install` or `download`.
    PipInstall,
    /// `conda install`, `conda create`, or `mamba install`.
    CondaInstall,
    /// apt/apt-get installing Python packages (interpreter or libraries;
    /// toolchain-only packages like `python3-dev` do not count).
    AptPythonInstall {
        packages: Vec<String>,
    },
    Other,
}

/// Suffixes of `python*-<suffix>` system packages that are build/tooling
/// concerns rather than Python package installations.
const APT_NON_LIBRARY_SUFFIXES: &[&str] = &[
    "dev",
    "pip",
    "venv",
    "setuptools",
    "wheel",
    "distutils",
    "minimal",
    "full",
    "all",
    "apt",
];

pub fn classify(command: &SimpleCommand) -> CommandClass {
    let argv = command.argv();
    let Some(first) = argv.first() else {
        return CommandClass::Other;
    };
    match basename(first) {
        "docker" => classify_docker(&argv),
        "pip" | "pip3" => classify_pip(&argv[1..]),
        "python" | "python3" => {
            // `python -m pip install ...`
            if argv.get(1) == Some(&"-m") && matches!(argv.get(2), Some(&"pip") | Some(&"pip3")) {
                classify_pip(&argv[3..])
            } else {
                CommandClass::Other
            }
        }
        "conda" | "mamba" => match argv.get(1) {
            Some(&"install") => CommandClass::CondaInstall,
            Some(&"create") if basename(first) == "conda" => CommandClass::CondaInstall,
            _ => CommandClass::Other,
        },
        "apt" | "apt-get" => classify_apt(&argv[1..]),
        _ => CommandClass::Other,
    }
}

fn classify_docker(argv: &[&str]) -> CommandClass {
    // Subcommand chain, skipping global options (`docker -H host build`).
    let rest: Vec<(usize, &str)> = argv
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, word)| !word.starts_with('-'))
        .map(|(i, word)| (i, *word))
        .collect();
    let chain: Vec<&str> = rest.iter().map(|(_, w)| *w).take(2).collect();
    match chain.as_slice() {
        ["build", ..] | ["image", "build"] | ["buildx", "build"] => {
            let cache_from = argv
                .iter()
                .any(|w| *w == "--cache-from" || w.starts_with("--cache-from="));
            let mut tags = Vec::new();
            let mut iter = argv.iter().peekable();
            while let Some(word) = iter.next() {
                if *word == "-t" || *word == "--tag" {
                    if let Some(value) = iter.peek() {
                        tags.push(value.to_string());
                    }
                } else if let Some(value) = word.strip_prefix("--tag=") {
                    tags.push(value.to_string());
                }
            }
            CommandClass::DockerBuild { cache_from, tags }
        }
        ["buildx", "bake"] => CommandClass::DockerBuildxBake,
        ["pull", ..] => image_operand(argv, "pull")
            .map(|image_index| CommandClass::DockerPull { image_index })
            .unwrap_or(CommandClass::Other),
        ["push", ..] => image_operand(argv, "push")
            .map(|image_index| CommandClass::DockerPush { image_index })
            .unwrap_or(CommandClass::Other),
        _ => CommandClass::Other,
    }
}

/// Index of the image operand: the first non-option word after the
/// subcommand.
fn image_operand(argv: &[&str], subcommand: &str) -> Option<usize> {
    let sub = argv.iter().position(|w| *w == subcommand)?;
    argv.iter()
        .enumerate()
        .skip(sub + 1)
        .find(|(_, w)| !w.starts_with('-'))
        .map(|(i, _)| i)
}

fn classify_pip(rest: &[&str]) -> CommandClass {
    let subcommand = rest.iter().find(|w| !w.starts_with('-'));
    match subcommand {
        Some(&"install") | Some(&"download") => CommandClass::PipInstall,
        _ => CommandClass::Other,
    }
}

fn classify_apt(rest: &[&str]) -> CommandClass {
    let mut words = rest.iter().filter(|w| !w.starts_with('-'));
    if words.next() != Some(&"install") {
        return CommandClass::Other;
    }
    let packages: Vec<String> = words
        .filter(|w| is_python_library_package(w))
        .map(|w| w.to_string())
        .collect();
    if packages.is_empty() {
        CommandClass::Other
    } else {
        CommandClass::AptPythonInstall { packages }
    }
}

/// `python`, `python3`, `python3.12` (the interpreter) or
/// `python3-<library>` count; toolchain suffixes do not.
fn is_python_library_package(package: &str) -> bool {
    let Some(rest) = package.strip_prefix("python") else {
        return false;
    };
    let (version, suffix) = match rest.split_once('-') {
        Some((version, suffix)) => (version, Some(suffix)),
        None => (rest, None),
    };
    if !version.bytes().all(|b| b.is_ascii_digit() || b == b'.') {
        return false;
    }
    match suffix {
        None => true,
        Some(suffix) => !APT_NON_LIBRARY_SUFFIXES.contains(&suffix),
    }
}

fn basename(word: &str) -> &str {
    word.rsplit('/').next().unwrap_or(word)
}
