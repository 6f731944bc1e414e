"""Key expressions: the namespace isolation mechanism of the bus.

Every topic is a `/`-separated key. Subscriptions are patterns where `*`
matches exactly one segment and `**` matches any tail (or nothing), which is
how one vehicle's traffic stays invisible to another.
"""

from avpsim.msgbus.keyexpr import RemapRule, key_matches

PAIRS = [
    ("avp/*/status", "avp/v1/status"),
    ("avp/*/status", "avp/coord/queue"),
    ("avp/**", "avp/v2/goal/active"),
    ("avp/v1/**", "avp/v2/status"),
    ("avp/**/cmd", "avp/cmd"),
]

print("pattern matching:")
for pattern, key in PAIRS:
    print(f"  {pattern:14s} vs {key:22s} -> {key_matches(pattern, key)}")

print("\nremapping (the stand-in for namespace-scoped topic exposure):")
rule = RemapRule("avp/*/status", "local/$1/status")
for key in ("avp/v3/status", "avp/v9/status", "avp/v3/heartbeat"):
    print(f"  {key:20s} -> {rule.apply(key)}")

inverse = rule.inverse()
roundtrip = inverse.apply(rule.apply("avp/v3/status"))
print(f"\ninverse rule restores the original key: {roundtrip}")
