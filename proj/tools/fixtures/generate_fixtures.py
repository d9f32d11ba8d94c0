#!/usr/bin/env python3
"""Builds the pinned corpus and replay fixtures under fixtures/.

Everything is generated deterministically from fixed seeds so the committed
files can be regenerated byte-for-byte. The label structure is calibrated to
the reference counts the test suite asserts (618 ATT&CK records with the
known per-tactic supports, 177 CAPEC records, the recorded-run metrics), and
the replay batches are written in dataset order (records sorted by id, 20
per prompt).
"""

import json
import hashlib
import random
import sys
import uuid
from pathlib import Path

ROOT = Path(__file__).resolve().parents[2]
OUT = ROOT / "fixtures"

TACTICS = [
    ("COLLECTION", "collection"),
    ("COMMAND_AND_CONTROL", "command-and-control"),
    ("CREDENTIAL_ACCESS", "credential-access"),
    ("DEFENSE_EVASION", "defense-evasion"),
    ("DISCOVERY", "discovery"),
    ("EXECUTION", "execution"),
    ("EXFILTRATION", "exfiltration"),
    ("IMPACT", "impact"),
    ("INITIAL_ACCESS", "initial-access"),
    ("LATERAL_MOVEMENT", "lateral-movement"),
    ("PERSISTENCE", "persistence"),
    ("PRIVILEGE_ESCALATION", "privilege-escalation"),
    ("RECONNAISSANCE", "reconnaissance"),
    ("RESOURCE_DEVELOPMENT", "resource-development"),
]
NAME_TO_IDX = {name: i for i, (name, _) in enumerate(TACTICS)}
TACTIC_TA_ID = {
    "INITIAL_ACCESS": "TA0001", "EXECUTION": "TA0002", "PERSISTENCE": "TA0003",
    "PRIVILEGE_ESCALATION": "TA0004", "DEFENSE_EVASION": "TA0005",
    "CREDENTIAL_ACCESS": "TA0006", "DISCOVERY": "TA0007",
    "LATERAL_MOVEMENT": "TA0008", "COLLECTION": "TA0009",
    "EXFILTRATION": "TA0010", "COMMAND_AND_CONTROL": "TA0011",
    "IMPACT": "TA0040", "RESOURCE_DEVELOPMENT": "TA0042",
    "RECONNAISSANCE": "TA0043",
}

# Distinct lexical fields per tactic; the fine-tuning criteria rely on the
# corpus carrying a learnable signal, like the real framework prose does.
CUES = {
    "COLLECTION": ["clipboard", "screenshot", "keystroke", "staging",
                   "archive", "microphone", "harvest", "capture"],
    "COMMAND_AND_CONTROL": ["beacon", "callback", "relay", "proxy", "tunnel",
                            "heartbeat", "tasking", "uplink"],
    "CREDENTIAL_ACCESS": ["password", "credential", "hash", "kerberos",
                          "keychain", "vault", "bruteforce", "dumping"],
    "DEFENSE_EVASION": ["masquerading", "obfuscation", "evade", "tamper",
                        "rootkit", "timestomp", "unhook", "concealment"],
    "DISCOVERY": ["enumerate", "enumeration", "inventory", "survey",
                  "topology", "querying", "probing", "mapping"],
    "EXECUTION": ["execute", "interpreter", "script", "shell", "macro",
                  "launch", "spawn", "loader"],
    "EXFILTRATION": ["exfiltrate", "exfiltration", "egress", "siphon",
                     "smuggle", "outbound", "chunked", "removable"],
    "IMPACT": ["destroy", "ransom", "wipe", "deface", "denial", "degrade",
               "corrupt", "shutdown"],
    "INITIAL_ACCESS": ["phishing", "spearphishing", "attachment", "driveby",
                       "lure", "watering", "perimeter", "entry"],
    "LATERAL_MOVEMENT": ["lateral", "pivot", "rdp", "smb", "winrm", "hop",
                         "traversal", "adjacent"],
    "PERSISTENCE": ["persistence", "autostart", "startup", "runkey",
                    "implant", "bootkit", "logon", "cron"],
    "PRIVILEGE_ESCALATION": ["escalate", "elevation", "setuid", "sudo",
                             "uac", "privileged", "root", "superuser"],
    "RECONNAISSANCE": ["reconnaissance", "scanning", "osint", "footprint",
                       "whois", "fingerprint", "prospect", "staffing"],
    "RESOURCE_DEVELOPMENT": ["acquire", "capability", "domains",
                             "certificate", "toolset", "procure",
                             "rented", "provisioning"],
}

FILLER = ["compromised", "target", "host", "network", "system", "software",
          "component", "activity", "campaign", "environments", "victims",
          "infrastructure"]

TACTIC_GOALS = {
    "COLLECTION": "gather data of interest from the victim environment",
    "COMMAND_AND_CONTROL": "communicate with controlled systems inside the victim network",
    "CREDENTIAL_ACCESS": "steal account names and authentication material",
    "DEFENSE_EVASION": "avoid being detected while operating",
    "DISCOVERY": "figure out what is in the victim environment",
    "EXECUTION": "run attacker-controlled code on a host",
    "EXFILTRATION": "move stolen data out of the victim network",
    "IMPACT": "manipulate, interrupt, or destroy systems and data",
    "INITIAL_ACCESS": "get into the victim network",
    "LATERAL_MOVEMENT": "move through the victim environment",
    "PERSISTENCE": "keep a foothold across restarts and credential changes",
    "PRIVILEGE_ESCALATION": "gain higher-level permissions",
    "RECONNAISSANCE": "collect information to plan future operations",
    "RESOURCE_DEVELOPMENT": "establish resources to support operations",
}

# ---------------------------------------------------------------------------
# label structure (technique records; the 14 tactic descriptions add one
# single-label record each)
# ---------------------------------------------------------------------------

ATTACK_COMBOS = [
    ({"PERSISTENCE", "PRIVILEGE_ESCALATION", "DEFENSE_EVASION"}, 40),
    ({"PERSISTENCE", "PRIVILEGE_ESCALATION"}, 34),
    ({"PRIVILEGE_ESCALATION", "DEFENSE_EVASION"}, 20),
    ({"PERSISTENCE", "DEFENSE_EVASION"}, 6),
    ({"PERSISTENCE", "INITIAL_ACCESS"}, 3),
    ({"PERSISTENCE", "LATERAL_MOVEMENT"}, 2),
    ({"DEFENSE_EVASION", "DISCOVERY"}, 5),
    ({"DEFENSE_EVASION", "EXECUTION"}, 4),
    ({"DEFENSE_EVASION", "LATERAL_MOVEMENT"}, 3),
    ({"DEFENSE_EVASION", "CREDENTIAL_ACCESS"}, 6),
    ({"DEFENSE_EVASION", "COLLECTION"}, 4),
    ({"CREDENTIAL_ACCESS", "COLLECTION"}, 2),
    ({"CREDENTIAL_ACCESS", "LATERAL_MOVEMENT"}, 2),
    ({"COLLECTION", "EXFILTRATION"}, 2),
    ({"COMMAND_AND_CONTROL", "EXFILTRATION"}, 2),
    ({"COMMAND_AND_CONTROL", "LATERAL_MOVEMENT"}, 1),
    ({"DISCOVERY", "RECONNAISSANCE"}, 1),
    ({"EXECUTION", "LATERAL_MOVEMENT"}, 1),
    ({"PRIVILEGE_ESCALATION"}, 2),
    ({"PERSISTENCE"}, 28),
    ({"DEFENSE_EVASION"}, 96),
    ({"CREDENTIAL_ACCESS"}, 53),
    ({"COLLECTION"}, 29),
    ({"COMMAND_AND_CONTROL"}, 36),
    ({"DISCOVERY"}, 38),
    ({"EXECUTION"}, 31),
    ({"EXFILTRATION"}, 14),
    ({"IMPACT"}, 25),
    ({"INITIAL_ACCESS"}, 16),
    ({"LATERAL_MOVEMENT"}, 13),
    ({"RECONNAISSANCE"}, 41),
    ({"RESOURCE_DEVELOPMENT"}, 44),
]

# Reference per-tactic supports over all 618 records (techniques + the
# tactic description itself).
ATTACK_SUPPORTS = {
    "COLLECTION": 38, "COMMAND_AND_CONTROL": 40, "CREDENTIAL_ACCESS": 64,
    "DEFENSE_EVASION": 185, "DISCOVERY": 45, "EXECUTION": 37,
    "EXFILTRATION": 19, "IMPACT": 26, "INITIAL_ACCESS": 20,
    "LATERAL_MOVEMENT": 23, "PERSISTENCE": 114, "PRIVILEGE_ESCALATION": 97,
    "RECONNAISSANCE": 43, "RESOURCE_DEVELOPMENT": 45,
}

CAPEC_COMBOS = [
    ({"INITIAL_ACCESS", "PERSISTENCE", "PRIVILEGE_ESCALATION", "DEFENSE_EVASION"}, 4),
    ({"PERSISTENCE", "PRIVILEGE_ESCALATION", "DEFENSE_EVASION"}, 9),
    ({"INITIAL_ACCESS", "DEFENSE_EVASION", "LATERAL_MOVEMENT"}, 4),
    ({"CREDENTIAL_ACCESS", "DEFENSE_EVASION", "DISCOVERY"}, 3),
    ({"INITIAL_ACCESS", "DEFENSE_EVASION"}, 7),
    ({"INITIAL_ACCESS", "LATERAL_MOVEMENT"}, 2),
    ({"INITIAL_ACCESS", "PERSISTENCE"}, 3),
    ({"PERSISTENCE", "PRIVILEGE_ESCALATION"}, 5),
    ({"PERSISTENCE", "CREDENTIAL_ACCESS"}, 3),
    ({"PRIVILEGE_ESCALATION", "DEFENSE_EVASION"}, 7),
    ({"PRIVILEGE_ESCALATION", "CREDENTIAL_ACCESS"}, 3),
    ({"DEFENSE_EVASION", "CREDENTIAL_ACCESS"}, 6),
    ({"DEFENSE_EVASION", "DISCOVERY"}, 4),
    ({"DEFENSE_EVASION", "COLLECTION"}, 3),
    ({"CREDENTIAL_ACCESS", "COLLECTION"}, 3),
    ({"CREDENTIAL_ACCESS", "DISCOVERY"}, 3),
    ({"DISCOVERY", "RECONNAISSANCE"}, 2),
    ({"COLLECTION", "EXFILTRATION"}, 1),
    ({"COLLECTION", "COMMAND_AND_CONTROL"}, 1),
    ({"COMMAND_AND_CONTROL", "LATERAL_MOVEMENT"}, 1),
    ({"INITIAL_ACCESS"}, 13),
    ({"PERSISTENCE"}, 6),
    ({"PRIVILEGE_ESCALATION"}, 8),
    ({"DEFENSE_EVASION"}, 12),
    ({"CREDENTIAL_ACCESS"}, 12),
    ({"DISCOVERY"}, 11),
    ({"COLLECTION"}, 11),
    ({"COMMAND_AND_CONTROL"}, 2),
    ({"LATERAL_MOVEMENT"}, 4),
    ({"IMPACT"}, 16),
    ({"RECONNAISSANCE"}, 4),
    ({"RESOURCE_DEVELOPMENT"}, 2),
    ({"EXECUTION"}, 2),
]

CAPEC_SUPPORTS = {
    "COLLECTION": 19, "COMMAND_AND_CONTROL": 4, "CREDENTIAL_ACCESS": 33,
    "DEFENSE_EVASION": 59, "DISCOVERY": 23, "EXECUTION": 2,
    "EXFILTRATION": 1, "IMPACT": 16, "INITIAL_ACCESS": 33,
    "LATERAL_MOVEMENT": 11, "PERSISTENCE": 30, "PRIVILEGE_ESCALATION": 36,
    "RECONNAISSANCE": 6, "RESOURCE_DEVELOPMENT": 2,
}


def check_combos(combos, supports, n_extra_singletons=0):
    totals = {name: 0 for name, _ in TACTICS}
    records = 0
    for combo, count in combos:
        records += count
        for t in combo:
            totals[t] += count
    for name, _ in TACTICS:
        want = supports[name] - n_extra_singletons
        assert totals[name] == want, (name, totals[name], want)
    return records


# ---------------------------------------------------------------------------
# prose synthesis
# ---------------------------------------------------------------------------

def sentence(rng, tactic, cue_count=3):
    cues = rng.sample(CUES[tactic], cue_count)
    f = [rng.choice(FILLER) for _ in range(2)]
    shapes = [
        "Adversaries may rely on {c0} and {c1} alongside {c2} on {f0} hosts.",
        "This behavior involves {c0} and {c1}, often combined with {c2} {f0}.",
        "Operators leverage {c0}, {c1}, or {c2} against the {f0} {f1}.",
        "Tooling that performs {c0} is frequently paired with {c1} and {c2}.",
        "Campaigns abuse {c0}, then stage {c1} with {c2} to reach the {f0}.",
    ]
    shape = rng.choice(shapes)
    return shape.format(c0=cues[0], c1=cues[1], c2=cues[2], f0=f[0], f1=f[1])


def description_for(rng, labels, long_form=False, register="attack"):
    parts = []
    if register == "capec":
        parts.append(rng.choice([
            "An attacker leverages a weakness in the target to progress.",
            "An adversary exploits trust boundaries inside the application.",
            "This pattern of attack captures a recurring adversary behavior.",
        ]))
    for t in sorted(labels):
        parts.append(sentence(rng, t))
        parts.append(sentence(rng, t))
        if rng.random() < 0.3:
            parts.append(sentence(rng, t))
    if long_form:
        # push the word count well past the 512-token budget
        while sum(len(p.split()) for p in parts) < 560:
            t = rng.choice(sorted(labels))
            parts.append(sentence(rng, t))
    return " ".join(parts)


def technique_name(rng, labels):
    t = sorted(labels)[rng.randrange(len(labels))]
    a = rng.choice(CUES[t]).capitalize()
    b = rng.choice(["Abuse", "Manipulation", "Hijacking", "Injection",
                    "Staging", "Interception", "Automation", "Bypass"])
    return f"{a} {b}"


def review_line(rng):
    subjects = ["The film", "This sequel", "The documentary", "Her debut feature",
                "The miniseries", "That remake", "The musical", "This thriller"]
    verdicts = ["never finds its footing", "is a gentle triumph",
                "drags through the second act", "earns every minute of its runtime",
                "wastes a terrific cast", "kept the whole theater laughing",
                "feels like three movies stitched together",
                "is the best thing I have watched all year"]
    details = ["the cinematography is gorgeous", "the dialogue lands flat",
               "the score swells at just the right moments",
               "the pacing is uneven but forgivable",
               "the leads have real chemistry",
               "the ending arrives out of nowhere",
               "every frame looks hand painted",
               "the supporting roles steal the show"]
    return (f"{rng.choice(subjects)} {rng.choice(verdicts)}; "
            f"{rng.choice(details)}, and {rng.choice(details)}.")


# ---------------------------------------------------------------------------
# ATT&CK bundle
# ---------------------------------------------------------------------------

def stix_uuid(kind, key):
    return f"{kind}--{uuid.uuid5(uuid.NAMESPACE_URL, 'ttpc/' + key)}"


def build_attack(rng):
    objects = []
    records = []  # (record_id, labels, text) for downstream use
    techniques = []  # (tid, labels)

    created = "2023-05-09T14:00:00.000Z"

    for name, short in TACTICS:
        ta = TACTIC_TA_ID[name]
        text = (f"The adversary is trying to {TACTIC_GOALS[name]}. "
                + sentence(rng, name) + " " + sentence(rng, name))
        objects.append({
            "type": "x-mitre-tactic",
            "id": stix_uuid("x-mitre-tactic", ta),
            "created": created, "modified": created,
            "name": name.replace("_", " ").title(),
            "description": text,
            "x_mitre_shortname": short,
            "x_mitre_domains": ["enterprise-attack"],
            "external_references": [{
                "source_name": "mitre-attack", "external_id": ta,
                "url": f"https://attack.example/tactics/{ta}",
            }],
        })
        records.append((ta, {name}, text))

    # expand combos into base techniques and sub-techniques
    expanded = []
    for combo, count in ATTACK_COMBOS:
        expanded.extend([frozenset(combo)] * count)

    # six long descriptions, spread deterministically
    long_indices = {13, 131, 247, 363, 479, 590}

    base_counter = 1400
    i = 0
    for combo_idx, labels in enumerate(expanded):
        # every group of three same-combo records shares a base id
        if combo_idx % 3 == 0 or expanded[combo_idx - 1] != labels:
            tid = f"T{base_counter}"
            base_counter += 1
            sub_counter = 0
            is_sub = False
        else:
            sub_counter += 1
            tid = f"T{base_counter - 1}.{sub_counter:03d}"
            is_sub = True
        text = description_for(rng, labels, long_form=(i in long_indices))
        objects.append({
            "type": "attack-pattern",
            "id": stix_uuid("attack-pattern", tid),
            "created": created, "modified": created,
            "name": technique_name(rng, labels),
            "description": text,
            "kill_chain_phases": [
                {"kill_chain_name": "mitre-attack",
                 "phase_name": dict(TACTICS)[t]}
                for t in sorted(labels)
            ],
            "external_references": [{
                "source_name": "mitre-attack", "external_id": tid,
                "url": f"https://attack.example/techniques/{tid}",
            }],
            "x_mitre_is_subtechnique": is_sub,
            "x_mitre_domains": ["enterprise-attack"],
        })
        records.append((tid, set(labels), text))
        techniques.append((tid, set(labels)))
        i += 1

    # objects that must be excluded or rejected by the parser
    objects.append({
        "type": "attack-pattern",
        "id": stix_uuid("attack-pattern", "revoked-1"),
        "created": created, "modified": created,
        "name": "Withdrawn Behavior", "description": "Superseded technique.",
        "revoked": True,
        "kill_chain_phases": [{"kill_chain_name": "mitre-attack",
                               "phase_name": "impact"}],
        "external_references": [{"source_name": "mitre-attack",
                                 "external_id": "T9801"}],
        "x_mitre_domains": ["enterprise-attack"],
    })
    objects.append({
        "type": "attack-pattern",
        "id": stix_uuid("attack-pattern", "deprecated-1"),
        "created": created, "modified": created,
        "name": "Deprecated Behavior", "description": "Deprecated technique.",
        "x_mitre_deprecated": True,
        "kill_chain_phases": [{"kill_chain_name": "mitre-attack",
                               "phase_name": "impact"}],
        "external_references": [{"source_name": "mitre-attack",
                                 "external_id": "T9802"}],
        "x_mitre_domains": ["enterprise-attack"],
    })
    objects.append({
        "type": "attack-pattern",
        "id": stix_uuid("attack-pattern", "mobile-1"),
        "created": created, "modified": created,
        "name": "Mobile Only Behavior", "description": "Out of domain.",
        "kill_chain_phases": [{"kill_chain_name": "mitre-mobile-attack",
                               "phase_name": "impact"}],
        "external_references": [{"source_name": "mitre-attack",
                                 "external_id": "T9803"}],
        "x_mitre_domains": ["mobile-attack"],
    })
    objects.append({
        "type": "attack-pattern",
        "id": stix_uuid("attack-pattern", "foreign-killchain-1"),
        "created": created, "modified": created,
        "name": "Unmappable Behavior",
        "description": "Annotated against a different kill chain.",
        "kill_chain_phases": [{"kill_chain_name": "lockheed",
                               "phase_name": "weaponization"}],
        "external_references": [{"source_name": "mitre-attack",
                                 "external_id": "T9804"}],
        "x_mitre_domains": ["enterprise-attack"],
    })
    objects.append({
        "type": "intrusion-set",
        "id": stix_uuid("intrusion-set", "g1"),
        "created": created, "modified": created,
        "name": "Synthetic Group",
    })

    bundle = {
        "type": "bundle",
        "id": stix_uuid("bundle", "enterprise-2023-05"),
        "objects": objects,
    }
    return bundle, records, techniques


# ---------------------------------------------------------------------------
# CAPEC catalog
# ---------------------------------------------------------------------------

def xml_escape(s):
    return (s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
             .replace('"', "&quot;"))


def realize_refs(rng, labels, tech_by_set, sole_by_tactic):
    """Chooses bundle techniques whose tactic sets union to `labels`."""
    labels = frozenset(labels)
    if labels in tech_by_set and rng.random() < 0.5:
        return [rng.choice(tech_by_set[labels])]
    refs = []
    remaining = set(labels)
    # prefer one multi-label technique that fits inside the target
    fits = [s for s in tech_by_set
            if len(s) > 1 and s <= labels and len(s) < len(labels)]
    if fits and rng.random() < 0.7:
        s = rng.choice(sorted(fits, key=lambda x: -len(x)))
        refs.append(rng.choice(tech_by_set[s]))
        remaining -= set(s)
    for t in sorted(remaining):
        refs.append(rng.choice(sole_by_tactic[t]))
    return refs


def build_capec(rng, techniques):
    tech_by_set = {}
    sole_by_tactic = {name: [] for name, _ in TACTICS}
    for tid, labels in techniques:
        tech_by_set.setdefault(frozenset(labels), []).append(tid)
        if len(labels) == 1:
            sole_by_tactic[next(iter(labels))].append(tid)

    expanded = []
    for combo, count in CAPEC_COMBOS:
        expanded.extend([frozenset(combo)] * count)
    rng.shuffle(expanded)

    # CAPEC ids: mapped and unmapped interleaved over 1..699 with gaps
    all_ids = rng.sample(range(1, 700), 593 + 3)  # 3 extra deprecated
    all_ids.sort()
    mapped_ids = set(rng.sample(all_ids[:-3], 177))

    mapped_iter = iter(sorted(mapped_ids))
    gold = {}
    entries = []
    mapped_count = 0
    for cid in all_ids[:-3]:
        if cid in mapped_ids:
            labels = expanded[mapped_count]
            mapped_count += 1
            refs = realize_refs(rng, labels, tech_by_set, sole_by_tactic)
            text = description_for(rng, labels, register="capec")
            gold[f"CAPEC-{cid}"] = set(labels)
            mappings = "".join(
                "\n        <capec:Taxonomy_Mapping Taxonomy_Name=\"ATTACK\">"
                f"\n          <capec:Entry_ID>{ref[1:]}</capec:Entry_ID>"
                f"\n          <capec:Entry_Name>{ref}</capec:Entry_Name>"
                "\n        </capec:Taxonomy_Mapping>"
                for ref in refs)
            if rng.random() < 0.3:
                mappings += ("\n        <capec:Taxonomy_Mapping Taxonomy_Name=\"WASC\">"
                             "\n          <capec:Entry_ID>21</capec:Entry_ID>"
                             "\n        </capec:Taxonomy_Mapping>")
            entries.append(
                f"    <capec:Attack_Pattern ID=\"{cid}\" "
                f"Name=\"{xml_escape(technique_name(rng, labels))} Pattern\" "
                "Abstraction=\"Standard\" Status=\"Stable\">\n"
                f"      <capec:Description>{xml_escape(text)}</capec:Description>\n"
                "      <capec:Taxonomy_Mappings>" + mappings + "\n"
                "      </capec:Taxonomy_Mappings>\n"
                "    </capec:Attack_Pattern>")
        else:
            # unmapped pattern: plausible prose, no ATT&CK taxonomy entry
            fake_labels = {rng.choice([name for name, _ in TACTICS])}
            text = description_for(rng, fake_labels, register="capec")
            extra = ""
            if rng.random() < 0.2:
                extra = ("\n      <capec:Taxonomy_Mappings>"
                         "\n        <capec:Taxonomy_Mapping Taxonomy_Name=\"OWASP\">"
                         "\n          <capec:Entry_ID>A5</capec:Entry_ID>"
                         "\n        </capec:Taxonomy_Mapping>"
                         "\n      </capec:Taxonomy_Mappings>")
            entries.append(
                f"    <capec:Attack_Pattern ID=\"{cid}\" "
                f"Name=\"{xml_escape(technique_name(rng, fake_labels))} Variant\" "
                "Abstraction=\"Detailed\" Status=\"Draft\">\n"
                f"      <capec:Description>{xml_escape(text)}</capec:Description>{extra}\n"
                "    </capec:Attack_Pattern>")

    for cid in all_ids[-3:]:
        entries.append(
            f"    <capec:Attack_Pattern ID=\"{cid}\" Name=\"Retired Pattern {cid}\" "
            "Abstraction=\"Standard\" Status=\"Deprecated\">\n"
            "      <capec:Description>No longer maintained.</capec:Description>\n"
            "    </capec:Attack_Pattern>")

    assert mapped_count == 177, mapped_count
    doc = ("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
           "<capec:Attack_Pattern_Catalog xmlns:capec=\"http://capec.mitre.org/capec-3\" "
           "Name=\"CAPEC\" Version=\"3.9\" Date=\"2023-05-09\">\n"
           "  <capec:Attack_Patterns>\n"
           + "\n".join(entries) + "\n"
           "  </capec:Attack_Patterns>\n"
           "</capec:Attack_Pattern_Catalog>\n")
    return doc, gold


# ---------------------------------------------------------------------------
# recorded model runs
# ---------------------------------------------------------------------------

def score_sets(gold_list, pred_map):
    tp = fp = fn = exact = 0
    for rid, g in gold_list:
        p = pred_map[rid][0]
        tp += len(g & p)
        fp += len(p - g)
        fn += len(g - p)
        if p == g:
            exact += 1
    micro = 2.0 * tp / (2.0 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0
    acc = exact / len(gold_list)
    return tp, fp, fn, exact, micro, acc


def build_run(gold_list, n_exact, n_fn, n_fp, unknown_label, seed):
    """Constructs per-record predictions hitting the exact integer targets.

    Returns {record_id: (predicted_set, [unknown_labels])}.
    """
    rng = random.Random(seed)
    n = len(gold_list)
    order = list(range(n))
    rng.shuffle(order)

    # unknown-label instance: a single-label record whose whole answer is the
    # unknown string; after the unknown policy it scores as NONE
    unknown_idx = None
    if unknown_label:
        for i in order:
            if len(gold_list[i][1]) == 1:
                unknown_idx = i
                break
    # exact records: prefer single-label ones so the FN budget can land on
    # the multi-label remainder
    candidates = [i for i in order if i != unknown_idx]
    singles = [i for i in candidates if len(gold_list[i][1]) == 1]
    multis = [i for i in candidates if len(gold_list[i][1]) > 1]
    exact_set = set((singles + multis)[:n_exact])
    nonexact = [i for i in candidates if i not in exact_set]

    fn_budget = n_fn
    fp_budget = n_fp
    preds = {}

    if unknown_idx is not None:
        rid, g = gold_list[unknown_idx]
        preds[rid] = (set(), [unknown_label])
        fn_budget -= len(g)

    drops = {i: 0 for i in nonexact}
    adds = {i: 0 for i in nonexact}
    # one add each guarantees every non-exact record differs from gold
    for i in nonexact:
        if fp_budget > 0:
            adds[i] += 1
            fp_budget -= 1
        else:
            drops[i] = 1  # fall back to a drop when the FP budget is small
            fn_budget -= 1
    round_i = 0
    while fp_budget > 0:
        i = nonexact[round_i % len(nonexact)]
        if adds[i] < min(3, 14 - len(gold_list[i][1]) - adds[i]):
            adds[i] += 1
            fp_budget -= 1
        round_i += 1
    round_i = 0
    while fn_budget > 0:
        i = nonexact[round_i % len(nonexact)]
        if drops[i] < len(gold_list[i][1]) and fn_budget > 0:
            drops[i] += 1
            fn_budget -= 1
        round_i += 1
        if round_i > 100 * len(nonexact):
            raise RuntimeError("cannot place FN budget")

    all_tactics = [name for name, _ in TACTICS]
    for i in nonexact:
        rid, g = gold_list[i]
        kept = sorted(g)
        for _ in range(drops[i]):
            kept.pop(rng.randrange(len(kept)))
        pred = set(kept)
        pool = [t for t in all_tactics if t not in g and t not in pred]
        rng.shuffle(pool)
        for _ in range(adds[i]):
            pred.add(pool.pop())
        preds[rid] = (pred, [])
    for i in exact_set:
        rid, g = gold_list[i]
        preds[rid] = (set(g), [])

    tp, fp, fn, exact, micro, acc = score_sets(gold_list, preds)
    assert exact == n_exact, (exact, n_exact)
    assert fn == n_fn, (fn, n_fn)
    assert fp == n_fp, (fp, n_fp)
    return preds, (tp, fp, fn, exact, micro, acc)


def answer_line(pred, unknowns):
    if unknowns and not pred:
        return "Tactic(s): " + ", ".join(unknowns)
    if not pred:
        return "Tactic(s): NONE"
    names = sorted(pred, key=lambda t: NAME_TO_IDX[t])
    out = ", ".join(names)
    return "Tactic(s): " + out


def write_replay(dirpath, gold_list, preds, stats, model_id, dataset_name,
                 expected_2dp, batch_size=20):
    dirpath.mkdir(parents=True, exist_ok=True)
    batches = []
    ids = [rid for rid, _ in gold_list]
    for b in range(0, len(ids), batch_size):
        chunk = ids[b:b + batch_size]
        lines = []
        for j, rid in enumerate(chunk):
            pred, unknowns = preds[rid]
            lines.append(f"{j + 1}. {answer_line(pred, unknowns)}")
        name = f"batch_{len(batches):03d}.txt"
        (dirpath / name).write_text("\n".join(lines) + "\n", encoding="utf-8")
        batches.append(name)
    tp, fp, fn, exact, micro, acc = stats
    order_sha = hashlib.sha256(("\n".join(ids) + "\n").encode()).hexdigest()
    manifest = {
        "provider_id": "replay",
        "model_id": model_id,
        "dataset": dataset_name,
        "record_count": len(ids),
        "batch_size": batch_size,
        "template": "default",
        "policy": "map-none",
        "batches": batches,
        "dataset_order_sha256": order_sha,
        "expected": {
            "tp": tp, "fp": fp, "fn": fn, "exact_matches": exact,
            "micro_f1": micro, "accuracy": acc,
            "micro_f1_2dp": expected_2dp[0], "accuracy_2dp": expected_2dp[1],
        },
    }
    (dirpath / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# prompt template files (kept in sync with the built-in defaults; a unit
# test asserts the file equals the compiled-in skeleton)
# ---------------------------------------------------------------------------

DEFAULT_SKELETON = (
    "You will be given a number of descriptions delimited by triple "
    "backticks and you have to predict which MITRE ATT&CK tactic(s) each "
    "description relates to. If a description does not relate to any of the "
    "MITRE ATT&CK tactics, simply predict it as [NONE].\n"
    "\n"
    "There are 14 MITRE ATT&CK Enterprise tactics in total and their names "
    "are:\n"
    "\n"
    "{TACTIC_LIST}\n"
    "\n"
    "Here are some examples of how you should do it:\n"
    "\n"
    "{EXAMPLES}\n"
    "\n"
    "Here are the descriptions:\n"
    "\n"
    "{DESCRIPTIONS}\n"
    "\n"
    "Write the output in the following format:\n"
    "Tactic(s): ...\n"
)

STRICT_SUFFIX = (
    "Do NOT add any other information in your answer and ONLY print the "
    "tactics' names.\n"
)


def main():
    rng = random.Random(20230509)
    OUT.mkdir(exist_ok=True)

    n_attack_tech = check_combos(ATTACK_COMBOS, ATTACK_SUPPORTS, 1)
    assert n_attack_tech == 604, n_attack_tech
    n_capec = check_combos(CAPEC_COMBOS, CAPEC_SUPPORTS, 0)
    assert n_capec == 177, n_capec

    # ---- ATT&CK ----
    bundle, attack_records, techniques = build_attack(rng)
    (OUT / "attack_bundle_2023_05.json").write_text(
        json.dumps(bundle, indent=1), encoding="utf-8")
    assert len(attack_records) == 618, len(attack_records)

    # sanity: privilege-escalation appears as the sole tactic in 3 records
    pe_sole = sum(1 for _, labels, _ in attack_records
                  if labels == {"PRIVILEGE_ESCALATION"})
    pe_total = sum(1 for _, labels, _ in attack_records
                   if "PRIVILEGE_ESCALATION" in labels)
    assert pe_sole == 3 and pe_total == 97, (pe_sole, pe_total)

    # ---- CAPEC ----
    capec_xml, capec_gold = build_capec(rng, techniques)
    (OUT / "capec_catalog_2023_05.xml").write_text(capec_xml, encoding="utf-8")
    assert len(capec_gold) == 177

    # ---- generic corpus (both encodings) ----
    reviews = [review_line(rng) for _ in range(100)]
    (OUT / "generic_reviews.txt").write_text("\n".join(reviews) + "\n",
                                             encoding="utf-8")
    (OUT / "generic_reviews.jsonl").write_text(
        "\n".join(json.dumps({"text": r}) for r in reviews) + "\n",
        encoding="utf-8")

    # ---- recorded runs ----
    attack_gold = sorted(((rid, labels) for rid, labels, _ in attack_records),
                         key=lambda x: x[0])
    capec_gold_list = sorted(capec_gold.items(), key=lambda x: x[0])

    # gpt-3.5 over ATT&CK: micro-F1 0.67, accuracy 0.44
    preds, stats = build_run(attack_gold, n_exact=272, n_fn=170, n_fp=447,
                             unknown_label="Remote-Access", seed=101)
    assert f"{stats[4]:.2f}" == "0.67" and f"{stats[5]:.2f}" == "0.44", stats
    write_replay(OUT / "llm_replay" / "gpt35_attack", attack_gold, preds,
                 stats, "gpt-3.5-turbo", "attack", ("0.67", "0.44"))

    # gpt-3.5 over CAPEC: micro-F1 0.42, accuracy 0.30
    preds, stats = build_run(capec_gold_list, n_exact=53, n_fn=135, n_fp=252,
                             unknown_label="Social-Engineering", seed=202)
    assert f"{stats[4]:.2f}" == "0.42" and f"{stats[5]:.2f}" == "0.30", stats
    write_replay(OUT / "llm_replay" / "gpt35_capec", capec_gold_list, preds,
                 stats, "gpt-3.5-turbo", "capec", ("0.42", "0.30"))

    # the fine-tuned encoder's recorded CAPEC run: micro-F1 0.46, accuracy 0.30
    preds, stats = build_run(capec_gold_list, n_exact=53, n_fn=155, n_fp=127,
                             unknown_label=None, seed=303)
    assert f"{stats[4]:.2f}" == "0.46" and f"{stats[5]:.2f}" == "0.30", stats
    lines = []
    for rid, g in capec_gold_list:
        p, unknowns = preds[rid]
        names = sorted(p, key=lambda t: NAME_TO_IDX[t])
        lines.append(json.dumps({
            "record_id": rid, "model_id": "securebert-sft",
            "tactics": names, "unknown_labels": [],
            "raw_response": "", "prompt_hash": "", "conforming": True,
        }))
    (OUT / "llm_replay" / "sft_capec_preds.jsonl").write_text(
        "\n".join(lines) + "\n", encoding="utf-8")
    (OUT / "llm_replay" / "sft_capec_manifest.json").write_text(
        json.dumps({
            "model_id": "securebert-sft", "dataset": "capec",
            "expected": {"tp": stats[0], "fp": stats[1], "fn": stats[2],
                         "exact_matches": stats[3], "micro_f1": stats[4],
                         "accuracy": stats[5], "micro_f1_2dp": "0.46",
                         "accuracy_2dp": "0.30"},
        }, indent=2) + "\n", encoding="utf-8")

    # ---- prompt templates ----
    tdir = OUT / "templates"
    tdir.mkdir(exist_ok=True)
    (tdir / "default_prompt.txt").write_text(DEFAULT_SKELETON, encoding="utf-8")
    (tdir / "strict_prompt.txt").write_text(DEFAULT_SKELETON + "\n" + STRICT_SUFFIX,
                                            encoding="utf-8")

    print("fixtures written to", OUT)
    print("attack records:", len(attack_records), "capec records:",
          len(capec_gold), "reviews:", len(reviews))


if __name__ == "__main__":
    sys.exit(main())
