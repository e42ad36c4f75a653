#!/usr/bin/env python3
"""Writes the golden CIDDS-001 ingest fixture and its expected parsed values.

The expected values are computed here with Python's datetime and decimal
modules, independently of the C++ parser they are checked against.
"""

import argparse
import csv
import datetime as dt
import io
import json
import random
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

HEADER = [
    "Date first seen", "Duration", "Proto", "Src IP Addr", "Src Pt", "Dst IP Addr", "Dst Pt",
    "Packets", "Bytes", "Flows", "Flags", "Tos", "class", "attackType", "attackID",
    "attackDescription",
]
CLASSES = ["normal", "attacker", "victim", "suspicious", "unknown"]
ATTACKS = ["pingScan", "portScan", "dos", "bruteForce"]
FLAGS = ["......", ".AP.SF", ".AP.S.", "....S.", ".A..S.", ".A.R..", ".AP...", "...RS."]
EPOCH = dt.datetime(1970, 1, 1)


def host(rng):
    kind = rng.random()
    if kind < 0.6:
        return f"192.168.{rng.choice([100, 200, 210, 220])}.{rng.randint(1, 254)}"
    if kind < 0.75:
        return rng.choice(["EXT_SERVER", "OPENSTACK_NET", "ATTACKER1", "ATTACKER2", "ATTACKER3"])
    if kind < 0.9:
        return f"{rng.randint(10000, 99999)}_{rng.randint(100, 999)}"
    return "DNS"


def port_text(rng, value):
    # Some CIDDS-001 exports print ports as floats.
    return f"{value}.0" if rng.random() < 0.2 else str(value)


def bytes_text(rng):
    """Returns (token as written, exact byte count)."""
    form = rng.random()
    if form < 0.55:
        n = rng.randint(28, 999_999)
        return str(n), n
    if form < 0.8:
        tenths = rng.randint(10, 999)
        text = f"{tenths // 10}.{tenths % 10}"
        spacing = rng.choice(["", " "])
        value = (Decimal(text) * 1000).to_integral_value(rounding=ROUND_HALF_UP)
        return f"{text}{spacing}K", int(value)
    tenths = rng.randint(10, 250)
    text = f"{tenths // 10}.{tenths % 10}"
    pad = rng.choice(["", " ", "   "])
    value = (Decimal(text) * 1_000_000).to_integral_value(rounding=ROUND_HALF_UP)
    return f"{pad}{text} M", int(value)


def make_rows(n, seed):
    rng = random.Random(seed)
    t = dt.datetime(2017, 3, 15, 0, 1, 16, 632000)
    rows, expected = [], []
    for i in range(n):
        t += dt.timedelta(milliseconds=rng.randint(0, 400_000))
        millis = (t - EPOCH) // dt.timedelta(milliseconds=1)
        stamp = t.strftime("%Y-%m-%d %H:%M:%S.") + f"{t.microsecond // 1000:03d}"
        proto = rng.choices(["TCP", "UDP", "ICMP", "IGMP", "GRE"], [60, 25, 12, 2, 1])[0]
        duration = round(rng.choice([0.0, rng.uniform(0, 2), rng.uniform(0, 500)]), 3)
        src, dst = host(rng), host(rng)
        if proto == "ICMP":
            src_port_text, src_port = "0", 0
            icmp_type, code = rng.choice([(8, 0), (0, 0), (3, 3), (3, 1), (11, 0)])
            dst_port_text, dst_port = f"{icmp_type}.{code}", icmp_type * 256 + code
        elif proto in ("TCP", "UDP"):
            src_port = rng.randint(1, 65535)
            dst_port = rng.choice([22, 25, 53, 80, 443, 445, 993, 8080, rng.randint(1, 65535)])
            src_port_text, dst_port_text = port_text(rng, src_port), port_text(rng, dst_port)
        else:
            src_port_text, src_port, dst_port_text, dst_port = "0", 0, "0", 0
        packets = rng.randint(1, 5000)
        bytes_token, byte_count = bytes_text(rng)
        if byte_count < packets:
            packets = max(1, byte_count // 28)
        flags = rng.choice(FLAGS) if proto == "TCP" else "......"
        tos = rng.choice([0, 0, 0, 16, 32, 192])
        label = CLASSES[i % 5] if i < 10 else rng.choices(CLASSES, [70, 8, 8, 7, 7])[0]
        if label in ("attacker", "victim"):
            attack = rng.choice(ATTACKS)
            attack_id = str(rng.randint(1, 70))
            description = rng.choice(["nmap -sS 192.168.220.0/24", "hping3, flood", 'say "hi"', "ssh dict"])
        else:
            attack, attack_id, description = "---", "---", "---"
        rows.append([stamp, f"{duration:.3f}", proto, src, src_port_text, dst, dst_port_text,
                     str(packets), bytes_token, "1", flags, str(tos), label, attack, attack_id,
                     description])
        expected.append({
            "millis": millis, "duration": duration, "proto": proto, "src_ip": src,
            "src_port": src_port, "dst_ip": dst, "dst_port": dst_port, "packets": packets,
            "bytes": byte_count, "flows": 1, "flags": flags, "tos": tos, "class": label,
            "attack_type": attack, "attack_id": attack_id, "attack_description": description,
        })
    return rows, expected


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "tests" / "data")
    parser.add_argument("--rows", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=2017)
    args = parser.parse_args()

    rows, expected = make_rows(args.rows, args.seed)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    writer.writerows(rows)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "golden_cidds.csv").write_text(buf.getvalue())
    (args.out / "golden_expected.json").write_text(json.dumps({"rows": expected}, indent=1) + "\n")


if __name__ == "__main__":
    main()
