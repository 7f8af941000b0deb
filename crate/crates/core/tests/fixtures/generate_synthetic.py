"""Regenerates synthetic_200.csv: 200 labeled 10-K-style sentences.

Sentences mix keyword hits, near misses (owner, net annual income, scustomer),
uncaptured synonyms (policyholders) and neutral filler. Labels are drawn so
that keyword presence and the human label disagree often enough to exercise
every confusion cell for every stakeholder tag.

    python3 generate_synthetic.py > synthetic_200.csv
"""

import csv
import random
import sys

rng = random.Random(20230814)

SUBJECTS = ["The Company", "Our bank", "The Corporation", "Management", "The insurer", "We"]
COMPANIES = ["Aflac", "Bank of America", "Cincinnati Financial", "Principal Financial", "State Street", "Acme Bancorp"]

# (fragment, tag or None, looks-material)
FRAGMENTS = [
    ("serves its customers with faster claims payments", "cus", True),
    ("expanded client onboarding across regions", "cus", True),
    ("protects consumer deposits through insurance", "cus", True),
    ("pays cash benefits to each policyholder promptly", "cus_hidden", True),
    ("reduced fees charged to insured members", "cus_hidden", True),
    ("a scustomer record was archived", None, False),
    ("returned capital to shareholders through buybacks", "inv", True),
    ("reported higher net income for the year", "inv", True),
    ("improved return on equity for stockholders", "inv", True),
    ("increased revenues from fee-based products", "inv", True),
    ("disclosed its earnings per share guidance", "inv", True),
    ("noted that net annual income was flat", None, False),
    ("identified the sole owner of the subsidiary", None, False),
    ("changed its ownership structure", "inv", True),
    ("raised financing through senior notes", "inv", True),
    ("offered training programs to employees", "emp", True),
    ("improved safety for its workers", "emp", True),
    ("promoted branch managers to regional roles", "emp", True),
    ("hired staff from community colleges", None, False),
    ("donated to local community organizations", "soc", True),
    ("reduced its impact on the natural environment", "soc", True),
    ("published a social responsibility report", "soc", True),
    ("supported ecological restoration projects", "soc", True),
    ("benefited society through financial literacy programs", "soc", True),
    ("tracked social performances internally", None, False),
    ("carried asbestos and environmental claims exposure", "soc_hidden", True),
    ("measured Level 2 assets at fair value", None, False),
    ("maintained a leverage ratio of 3.0 percent", None, False),
    ("filed forward-looking statements with risks", None, False),
    ("updated its accounting policies for leases", None, False),
    ("renewed a lease on its headquarters", None, False),
    ("recorded coverage of $114 million for 2021", None, False),
]


def make_sentence():
    parts = rng.sample(FRAGMENTS, rng.choice([1, 1, 2]))
    subject = rng.choice(SUBJECTS)
    text = subject + " " + " and ".join(p[0] for p in parts) + "."
    if rng.random() < 0.2:
        text = text.upper() if rng.random() < 0.3 else text.replace("The", "THE")
    tags = set()
    material = False
    for frag, tag, looks_material in parts:
        if not looks_material:
            continue
        # Annotators agree with the surface reading most of the time.
        if rng.random() < 0.8:
            material = True
            if tag is not None and rng.random() < 0.85:
                tags.add(tag.split("_")[0])
    if not material and rng.random() < 0.07:
        material = True
    return text, material, tags


def main():
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["id", "text", "material", "cus", "inv", "emp", "soc", "company", "year"])
    for i in range(200):
        text, material, tags = make_sentence()
        company = rng.choice(COMPANIES) if rng.random() < 0.8 else ""
        year = "2022" if company else ""
        w.writerow([
            f"syn{i:03d}", text, int(material),
            *(int(t in tags) for t in ["cus", "inv", "emp", "soc"]),
            company, year,
        ])


if __name__ == "__main__":
    main()
