"""Small, fast argument lists for every subcommand."""

PROTO = ["--n", "4", "--l", "40", "--gamma", "0.2", "--eps", "0.05"]

CASES = {
    "run-protocol": ["run-protocol", *PROTO, "--d", "1"],
    "game-winprob": ["game-winprob", "--trials", "2000"],
    "classical-value": ["classical-value"],
    "completeness": ["completeness", *PROTO, "--trials", "20"],
    "correctness": ["correctness", *PROTO, "--trials", "20"],
    "serfling": ["serfling", "--l", "200", "--trials", "2000"],
    "attack": ["attack", *PROTO, "--trials", "10"],
    "params": ["params", "--c-B", "0.99", "--c-E", "0.99", "--d-B", "1", "--d-E", "1", "--eps", "0.001",
               "--alpha", "0.49"],
    "distinguish": ["distinguish", *PROTO, "--trials", "10"],
    "otp-selftest": ["otp-selftest", "--samples", "3"],
}
