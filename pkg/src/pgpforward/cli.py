"""Operator command line.

Subcommands: gen-key, setup-forward, encrypt, decrypt, proxy-run, inspect,
harness.  Exit codes: 0 success, 2 usage, 3 validation or cryptographic
failure, 4 I/O failure.  Secret material never reaches stdout; secret key
files are written owner-only.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click

from . import proxy as proxymod
from .armor import LABEL_MESSAGE, LABEL_PUBLIC_KEY, LABEL_SECRET_KEY, armor, dearmor
from .errors import (
    BadFraming,
    ChecksumMismatch,
    CorruptStore,
    DegenerateSecret,
    DuplicateEntry,
    ForwardingError,
    InsufficientSamples,
    InvalidRecipientKey,
    KeyIdMismatch,
    MalformedPacket,
    NotFound,
    NotInLargeSubgroup,
    PayloadAuthFailure,
    SmallSubgroupRejection,
    StorageFailure,
    UnsupportedAlgorithm,
    UnwrapIntegrityFailure,
    ZeroInverse,
)
from .harness import SCENARIOS, run_harness
from .messages import decrypt_message, effective_kdf_fingerprint, encrypt_message, parse_message
from .packets import (
    KdfParams,
    PublicKeyMaterial,
    SecretKeyMaterial,
    parse_public_key,
    parse_secret_key,
    serialize_public_key,
    serialize_secret_key,
)
from .protocol import generate_keypair, setup_forwarding
from .rand import ByteSource, drbg, system_rng
from .session import DEFAULT_HASH_ID, DEFAULT_SYM_ID

_VALIDATION_ERRORS = (
    MalformedPacket,
    UnsupportedAlgorithm,
    ChecksumMismatch,
    BadFraming,
    UnwrapIntegrityFailure,
    PayloadAuthFailure,
    SmallSubgroupRejection,
    NotInLargeSubgroup,
    InvalidRecipientKey,
    DegenerateSecret,
    KeyIdMismatch,
    DuplicateEntry,
    NotFound,
    CorruptStore,
    ZeroInverse,
    InsufficientSamples,
    ValueError,
)

EXIT_VALIDATION = 3
EXIT_IO = 4

_SEED_HELP = "Deterministic randomness for tests/fixtures; UNSAFE for real keys."


def _rng(seed: int | None) -> ByteSource:
    return system_rng if seed is None else drbg(seed)


def _write_text(path: Path, text: str, secret: bool = False) -> None:
    path.write_text(text)
    if secret:
        os.chmod(path, 0o600)


def _load_public(path: str) -> PublicKeyMaterial:
    data, label = dearmor(Path(path).read_text())
    if label == LABEL_PUBLIC_KEY:
        return parse_public_key(data)
    if label == LABEL_SECRET_KEY:
        return parse_secret_key(data).material
    raise MalformedPacket(f"{path}: not a key block ({label})")


def _load_secret(path: str) -> SecretKeyMaterial:
    data, label = dearmor(Path(path).read_text())
    if label != LABEL_SECRET_KEY:
        raise MalformedPacket(f"{path}: not a secret key block ({label})")
    return parse_secret_key(data)


def _write_keypair_files(
    out_dir: Path, mat: PublicKeyMaterial, key: SecretKeyMaterial, force: bool
) -> tuple[Path, Path]:
    key_id = mat.key_id.hex()
    pub_path = out_dir / f"{key_id}.pub"
    sec_path = out_dir / f"{key_id}.sec"
    for p in (pub_path, sec_path):
        if p.exists() and not force:
            raise StorageFailure(f"{p} exists; pass --force to overwrite")
    _write_text(pub_path, armor(serialize_public_key(mat), LABEL_PUBLIC_KEY))
    _write_text(sec_path, armor(serialize_secret_key(key), LABEL_SECRET_KEY), secret=True)
    return pub_path, sec_path


@click.group()
def cli() -> None:
    """Divert-capable encrypted message tool: key management, encryption,
    the transforming proxy, and the security harness."""


@cli.command("gen-key")
@click.option("--out-dir", type=click.Path(file_okay=False), default=".", show_default=True)
@click.option("--seed", type=int, default=None, help=_SEED_HELP)
@click.option("--force", is_flag=True, help="Overwrite existing key files.")
def cmd_gen_key(out_dir: str, seed: int | None, force: bool) -> None:
    """Generate a long-term decryption key pair."""
    rng = _rng(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    kp = generate_keypair(rng)
    kdf = KdfParams(version=1, hash_id=DEFAULT_HASH_ID, sym_id=DEFAULT_SYM_ID)
    mat = PublicKeyMaterial(kp.public, kdf)
    pub_path, sec_path = _write_keypair_files(
        out, mat, SecretKeyMaterial(mat, kp.secret), force
    )
    click.echo(f"fingerprint: {kp.fingerprint.hex()}")
    click.echo(f"key id: {kp.key_id.hex()}")
    click.echo(f"public key: {pub_path}")
    click.echo(f"secret key: {sec_path}")


@cli.command("setup-forward")
@click.option("--source", "source_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Source secret key file (.sec).")
@click.option("--out-dir", type=click.Path(file_okay=False), default=".", show_default=True)
@click.option("--store", "store_path", envvar="PGPFORWARD_STORE", default=None, help="Also register the entry in this proxy store (env PGPFORWARD_STORE).")
@click.option("--seed", type=int, default=None, help=_SEED_HELP)
@click.option("--force", is_flag=True, help="Overwrite existing key files.")
def cmd_setup_forward(
    source_path: str, out_dir: str, store_path: str | None, seed: int | None, force: bool
) -> None:
    """Issue a forwarding: fresh delegate key pair plus proxy factor.

    The delegate's public key embeds the source's effective KDF
    fingerprint (version 2 parameters, flag 0x01), so chained forwardings
    keep the original recipient's fingerprint.
    """
    rng = _rng(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    source = _load_secret(source_path)
    source_mat = source.material
    effective_fp = effective_kdf_fingerprint(source_mat)

    grant = setup_forwarding(source.secret, effective_fp, rng)
    kp = grant.new_keypair
    kdf = KdfParams(
        version=2,
        hash_id=source_mat.kdf.hash_id,
        sym_id=source_mat.kdf.sym_id,
        flags=0x01,
        fingerprint=grant.source_fingerprint,
    )
    mat = PublicKeyMaterial(kp.public, kdf)

    # issued-delegate registry: one line per grant, mechanizing the
    # requirement that every delegate gets a unique secret
    registry = out / f"{source_mat.key_id.hex()}.issued"
    issued = registry.read_text().split() if registry.exists() else []
    if mat.key_id.hex() in issued:
        raise DuplicateEntry("delegate key id already issued for this source")

    pub_path, sec_path = _write_keypair_files(
        out, mat, SecretKeyMaterial(mat, kp.secret), force
    )
    entry = proxymod.ForwardingEntry(
        source_key_id=source_mat.key_id,
        dest_key_id=mat.key_id,
        proxy_factor=grant.proxy_factor,
        source_fingerprint=grant.source_fingerprint,
    )
    entry_path = out / f"{source_mat.key_id.hex()}-{mat.key_id.hex()}.entry"
    single = proxymod.ProxyStore([entry])
    proxymod.store_save(single, str(entry_path))
    os.chmod(entry_path, 0o600)

    with registry.open("a") as fh:
        fh.write(mat.key_id.hex() + "\n")

    if store_path:
        if Path(store_path).exists():
            store = proxymod.store_load(store_path)
        else:
            store = proxymod.ProxyStore()
        store.register(entry)
        proxymod.store_save(store, store_path)
        click.echo(f"registered in store: {store_path}")

    click.echo(f"delegate fingerprint: {mat.fingerprint.hex()}")
    click.echo(f"delegate key id: {mat.key_id.hex()}")
    click.echo(f"delegate public key: {pub_path}")
    click.echo(f"delegate secret key: {sec_path}")
    click.echo(f"proxy entry file: {entry_path}")


@cli.command("encrypt")
@click.option("--to", "recipient_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Recipient public key file.")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--seed", type=int, default=None, help=_SEED_HELP)
def cmd_encrypt(recipient_path: str, in_path: str, out_path: str, seed: int | None) -> None:
    """Encrypt a file to a recipient key with a deferred key exchange."""
    recipient = _load_public(recipient_path)
    plaintext = Path(in_path).read_bytes()
    armored = encrypt_message(recipient, plaintext, _rng(seed))
    Path(out_path).write_text(armored)
    click.echo(f"encrypted to key {recipient.key_id.hex()}: {out_path}")


@cli.command("decrypt")
@click.option("--key", "key_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Secret key file.")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, help="Output file, or - for stdout.")
def cmd_decrypt(key_path: str, in_path: str, out_path: str) -> None:
    """Decrypt a message; version-2 KDF parameters resolve the fingerprint
    override automatically."""
    key = _load_secret(key_path)
    plaintext = decrypt_message(key, Path(in_path).read_text())
    if out_path == "-":
        sys.stdout.buffer.write(plaintext)
    else:
        Path(out_path).write_bytes(plaintext)
        click.echo(f"decrypted: {out_path}")


@cli.command("proxy-run")
@click.option("--store", "store_path", required=True, envvar="PGPFORWARD_STORE", type=click.Path(exists=True, dir_okay=False), help="Proxy factor store (env PGPFORWARD_STORE).")
@click.option("--in-dir", type=click.Path(exists=True, file_okay=False), default=None, help="Directory of armored messages; stdin when omitted.")
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--rules", "rules_path", type=click.Path(exists=True, dir_okay=False), default=None, help="Filter rules: '<forward|drop> <field> <pattern>' per line.")
@click.option("--meta", "meta_path", type=click.Path(exists=True, dir_okay=False), default=None, help="Metadata sidecar for stdin mode.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None, help="Write report lines here instead of stdout.")
def cmd_proxy_run(
    store_path: str,
    in_dir: str | None,
    out_dir: str,
    rules_path: str | None,
    meta_path: str | None,
    report_path: str | None,
) -> None:
    """Transform every incoming message for its registered delegates."""
    store = proxymod.store_load(store_path)
    rules = proxymod.parse_rules(Path(rules_path).read_text()) if rules_path else []
    service = proxymod.ProxyService(store, rules)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    jobs: list[tuple[str, str, dict[str, str]]] = []  # (name, armored, metadata)
    if in_dir is None:
        meta = proxymod.parse_metadata(Path(meta_path).read_text()) if meta_path else {}
        jobs.append(("stdin", sys.stdin.read(), meta))
    else:
        for path in sorted(Path(in_dir).iterdir()):
            if not path.is_file() or path.suffix == ".meta":
                continue
            sidecar = path.with_suffix(path.suffix + ".meta")
            meta = proxymod.parse_metadata(sidecar.read_text()) if sidecar.exists() else {}
            jobs.append((path.stem, path.read_text(), meta))

    report_lines: list[str] = []
    for name, armored, meta in jobs:
        outputs, report = service.process_message(armored, meta)
        for dest_key_id, text in outputs:
            target = out / f"{name}.to-{dest_key_id.hex()}.asc"
            target.write_text(text)
        report_lines.extend(f"{name} {line}" for line in report.to_lines())

    if report_path:
        Path(report_path).write_text("\n".join(report_lines) + "\n")
    else:
        for line in report_lines:
            click.echo(line)


@cli.command("inspect")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
def cmd_inspect(in_path: str) -> None:
    """Print the structure of a message, key file, or proxy store without
    revealing secret material."""
    raw = Path(in_path).read_bytes()
    if raw.startswith(proxymod.STORE_MAGIC):
        store = proxymod.store_load(in_path)
        click.echo(f"proxy store: {len(store)} entries")
        for e in store.entries():
            click.echo(
                f"  source={e.source_key_id.hex()} dest={e.dest_key_id.hex()}"
                f" fingerprint={e.source_fingerprint.hex()}"
                f" enabled={'yes' if e.enabled else 'no'}"
                f" factor={e.proxy_factor.encode()[:2].hex()}..(redacted)"
            )
        return

    data, label = dearmor(raw.decode("utf-8", errors="replace"))
    if label == LABEL_MESSAGE:
        parsed = parse_message(raw.decode())
        p = parsed.pkesk
        click.echo("message")
        click.echo(f"  packet: key exchange v{p.version}")
        click.echo(f"  recipient key id: {p.recipient_key_id.hex()}")
        click.echo(f"  public-key algorithm: {p.pk_algorithm:#04x}")
        click.echo(f"  curve oid: {p.curve_oid.hex()}")
        click.echo(f"  ephemeral share: {p.ephemeral.hex()}")
        click.echo(f"  wrapped session key ({len(p.wrapped_session_key)} octets): {p.wrapped_session_key.hex()}")
        click.echo(f"  sealed payload: {len(parsed.sealed_payload)} octets")
        return
    if label in (LABEL_PUBLIC_KEY, LABEL_SECRET_KEY):
        secret = label == LABEL_SECRET_KEY
        mat = parse_secret_key(data).material if secret else parse_public_key(data)
        click.echo("secret key" if secret else "public key")
        click.echo(f"  fingerprint: {mat.fingerprint.hex()}")
        click.echo(f"  key id: {mat.key_id.hex()}")
        click.echo(f"  curve oid: {mat.curve_oid.hex()}")
        click.echo(f"  public point: {mat.public.hex()}")
        kdf = mat.kdf
        click.echo(
            f"  kdf params: v{kdf.version} hash={kdf.hash_id:#04x} sym={kdf.sym_id:#04x}"
            + (f" flags={kdf.flags:#04x}" if kdf.version == 2 else "")
        )
        if kdf.has_replacement_fingerprint:
            click.echo(f"  kdf fingerprint override: {kdf.fingerprint.hex()}")
        if secret:
            click.echo("  secret scalar: 32 octets (withheld)")
        return
    raise MalformedPacket(f"unrecognized armor label {label!r}")


@cli.command("harness")
@click.option("--samples", type=int, default=10000, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--scenario", type=click.Choice(("all",) + SCENARIOS), default="all", show_default=True)
@click.option("--alpha", type=float, default=0.01, show_default=True)
def cmd_harness(samples: int, seed: int, scenario: str, alpha: float) -> None:
    """Run the view-indistinguishability comparison and print one line per
    scenario/family: samples, KS statistic, p-value, verdict."""
    scenarios = SCENARIOS if scenario == "all" else (scenario,)
    results = run_harness(samples, seed, scenarios, alpha)
    failed = False
    for res in results:
        click.echo(res.line())
        failed = failed or not res.passed
    if failed:
        raise ForwardingError("one or more families failed the distinguisher test")


def main() -> None:
    try:
        cli(standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(130)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.UsageError as exc:
        exc.show()
        sys.exit(2)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except _VALIDATION_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except (StorageFailure, OSError) as exc:
        click.echo(f"i/o error: {exc}", err=True)
        sys.exit(EXIT_IO)
    except ForwardingError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)


if __name__ == "__main__":
    main()
