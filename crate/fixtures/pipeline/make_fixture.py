#!/usr/bin/env python3
"""Regenerates the 100-author pipeline fixture in this directory.

The output is deterministic; rerunning the script rewrites identical files.
Cases covered: pre-1808 and undated authors, homonyms on every side,
birth-year mismatches, case/whitespace/diacritic name variants, Google
Books enrichment by work and edition ISBN, invalid ISBNs, a malformed line,
a dangling edition, and authors that cannot be classified.
"""

import json
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent
SOURCES = HERE / "sources"

WESTERN = ["US", "GB", "FR", "DE", "IT", "ES", "NL", "SE", "CA", "AU", "IE", "PT"]
COLONIES = ["NG", "IN", "JM", "MX", "BR", "KE", "DZ", "VN", "PH", "EG", "PE", "SN"]
CONTINENT = {
    "US": "North America", "CA": "North America", "MX": "Latin America",
    "GB": "Europe", "FR": "Europe", "DE": "Europe", "IT": "Europe", "ES": "Europe",
    "NL": "Europe", "SE": "Europe", "IE": "Europe", "PT": "Europe",
    "AU": "Oceania", "NG": "Africa", "KE": "Africa", "DZ": "Africa", "EG": "Africa",
    "SN": "Africa", "IN": "Asia", "VN": "Asia", "PH": "Asia",
    "JM": "Latin America", "BR": "Latin America",
    # PE deliberately has no continent
}
MINORITIES = [
    ("US", "African American"),
    ("US", "Chicano"),
    ("GB", "British Asian"),
    ("FR", "Maghrebi French"),
    ("DE", "Turkish German"),
]
FIRST = ["Ada", "Bruno", "Chiara", "Dmitri", "Elif", "Farah", "Gustavo", "Hana",
         "Ines", "Jonas", "Kwame", "Lucía", "Mateo", "Nadia", "Oskar", "Priya",
         "Quentin", "Rosa", "Søren", "Tomás", "Uma", "Viktor", "Wanjiru", "Ximena",
         "Yusuf", "Zoë", "Amara", "Björn", "Chidi", "Dalia"]
LAST = ["Abara", "Berg", "Costa", "Duval", "Eze", "Fontaine", "García", "Hoffmann",
        "Ibáñez", "Jansen", "Kamau", "Lindqvist", "Mendoza", "Nwosu", "Okafor",
        "Perez", "Quaresma", "Rossi", "Šimić", "Tran", "Ueda", "Varga", "Weber",
        "Xavier", "Yilmaz", "Zapata", "Achebe", "Brontë", "Cárdenas", "Diallo"]
SUBJECTS = ["Fiction", "Poetry", "History", "Memoir", "Migration", "Family",
            "War", "Love", "Colonialism", "Science fiction", "Crime", "Childhood"]
PUBLISHERS = ["Penguin Books", "Faber & Faber", "Gallimard", "Heinemann",
              "Vintage", "Alfaguara", "Suhrkamp", "Picador"]
GENDERS = ["female", "male", "male", "female", "nonbinary"]


def isbn13(n):
    digits = [9, 7, 8] + [int(c) for c in f"{n:09d}"]
    total = sum(d * (1 if i % 2 == 0 else 3) for i, d in enumerate(digits))
    return "".join(map(str, digits)) + str((10 - total % 10) % 10)


def hyphenate(isbn):
    return f"{isbn[:3]}-{isbn[3]}-{isbn[4:8]}-{isbn[8:12]}-{isbn[12]}"


def dump(path, rows, extra_lines=()):
    lines = [json.dumps(r, ensure_ascii=False, sort_keys=True) for r in rows]
    lines.extend(extra_lines)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def birth_year(rng, i):
    if i % 10 == 0:
        return rng.randint(1808, 1927)
    if i % 10 == 9:
        return rng.randint(1997, 2004)
    return rng.randint(1928, 1996)


def main():
    rng = random.Random(20240517)
    SOURCES.mkdir(exist_ok=True)

    wd = []
    names = set()
    for i in range(100):
        while True:
            name = f"{rng.choice(FIRST)} {rng.choice(LAST)}"
            if name not in names:
                names.add(name)
                break
        transnational = i % 3 == 0
        country = rng.choice(COLONIES if transnational else WESTERN)
        rec = {
            "source_id": f"Q{1000 + i}",
            "name": name,
            "birth_year": birth_year(rng, i),
            "country_of_birth": country,
            "gender": GENDERS[i % len(GENDERS)],
        }
        if rec["birth_year"] < 1990 and i % 4 == 1:
            rec["death_year"] = rec["birth_year"] + rng.randint(40, 90)
        wd.append(rec)

    # Western-born minority authors.
    for i, (country, group) in zip([2, 5, 8, 11, 14], MINORITIES):
        wd[i]["country_of_birth"] = country
        wd[i]["ethnic_group"] = group
    # A Western-born author whose ethnic group is not a listed minority.
    wd[17]["country_of_birth"] = "US"
    wd[17]["ethnic_group"] = "Irish American"
    # Unclassifiable: no country, and a country outside the taxonomy.
    del wd[20]["country_of_birth"]
    wd[23]["country_of_birth"] = "ZZ"

    # WD homonyms with different birth years; both match OL by year.
    wd[30]["name"], wd[31]["name"] = "Maria Santos", "Maria Santos"
    wd[30]["birth_year"], wd[31]["birth_year"] = 1950, 1972
    # WD homonyms with the same birth year; both stay unlinked.
    wd[32]["name"], wd[33]["name"] = "John Smith", "John Smith"
    wd[32]["birth_year"], wd[33]["birth_year"] = 1961, 1961

    # Pre-1808 and undated records; removed by the birth-year filter.
    for j, year in enumerate([1564, 1712, 1775, 1799, 1806, 1807]):
        wd.append({"source_id": f"Q{900 + j}", "name": f"Old Master {j}", "birth_year": year,
                   "country_of_birth": "GB", "gender": "male"})
    wd.append({"source_id": "Q950", "name": "Undated Writer", "country_of_birth": "FR"})
    wd.append({"source_id": "Q951", "name": "Another Undated", "country_of_birth": "NG"})
    # A pre-1808 homonym of a modern author; filtered before matching.
    wd[100]["name"] = wd[5]["name"]

    ol = []
    ol_link = {}
    for i in range(60):
        a = wd[i]
        name = a["name"]
        if i % 7 == 3:
            name = "  " + name.upper() + " "
        elif i % 7 == 5:
            name = name.replace(" ", "   ")
        year = a["birth_year"]
        if i in (6, 16, 26, 36, 46):
            year += 1  # year mismatch
        rec = {"source_id": f"OL{100 + i}A", "name": name, "birth_year": year}
        ol.append(rec)
        ol_link[a["source_id"]] = rec["source_id"]
    # OL homonym: a second record with the same name and year as wd[12].
    ol.append({"source_id": "OL900A", "name": wd[12]["name"], "birth_year": wd[12]["birth_year"]})
    # OL-only authors, never linked.
    for j in range(5):
        ol.append({"source_id": f"OL95{j}A", "name": f"Unlinked Ol {j}", "birth_year": 1960 + j})
    # A record without a birth year for an otherwise unknown name.
    ol.append({"source_id": "OL960A", "name": "Nameless Heir"})

    gr = []
    for i in range(40, 85):
        gr.append({"source_id": f"gr{5000 + i}", "name": wd[i]["name"].lower() if i % 5 == 0 else wd[i]["name"]})
    # GR homonym: name of wd[80] appears twice.
    gr.append({"source_id": "gr9000", "name": wd[80]["name"]})
    for j in range(4):
        gr.append({"source_id": f"gr95{j}", "name": f"Unlinked Gr {j}"})
    gr_malformed = ['{"source_id": "gr9999", "birth_year": 1970}', "{not json"]

    # Which source each author's works come from, mirroring the matcher.
    def ol_matched(i):
        return i < 60 and i not in (6, 16, 26, 36, 46, 12, 32, 33)

    def gr_matched(i):
        return 40 <= i < 85 and i != 80

    wd_works, ol_works, gr_works, gb = [], [], [], []
    ol_editions, gr_editions, wd_editions = [], [], []
    isbn_counter = 1000
    gb_counter = 0

    def next_isbn():
        nonlocal isbn_counter
        isbn_counter += 7
        return isbn13(isbn_counter)

    def gb_record(isbn, with_blurb=True, with_subjects=True, year=None):
        nonlocal gb_counter
        gb_counter += 1
        rec = {"source_id": f"gb{gb_counter:04d}", "title": f"GB volume {gb_counter}",
               "isbn_list": [isbn]}
        if with_blurb:
            rec["blurb"] = f"A sweeping story, volume {gb_counter}."
        if with_subjects:
            rec["subjects"] = rng.sample(SUBJECTS, 2)
        if year is not None:
            rec["publish_year"] = year
        gb.append(rec)

    for i, a in enumerate(wd[:100]):
        qid = a["source_id"]
        for k in range(i % 3):
            work = {"source_id": f"{qid}-w{k}", "title": f"{a['name']}: Collected {k}",
                    "author_source_ids": [qid], "language": "en"}
            if k == 0 and i % 4 == 0:
                work["subjects"] = [rng.choice(SUBJECTS)]
            if i % 6 == 0:
                isbn = next_isbn()
                work["isbn_list"] = [hyphenate(isbn)]
                if k == 0:
                    gb_record(isbn, with_subjects=False, year=1990 + i % 20)
            wd_works.append(work)
        if ol_matched(i):
            olid = ol_link[qid]
            for k in range(2 + i % 3):
                wid = f"{olid}-W{k}"
                work = {"source_id": wid, "title": f"{a['name']} novel {k}",
                        "author_source_ids": [olid], "subjects": rng.sample(SUBJECTS, 1 + k % 2)}
                isbn = next_isbn()
                work["isbn_list"] = [isbn]
                if k == 1:
                    work["publish_year"] = 1970 + (i + k) % 50
                    gb_record(isbn, year=2001)
                ol_works.append(work)
                for e in range(1 + (i + k) % 3):
                    ed = {"source_id": f"{wid}-E{e}", "work_source_id": wid,
                          "publisher": rng.choice(PUBLISHERS),
                          "publish_country": rng.choice(WESTERN + COLONIES)}
                    eisbn = next_isbn()
                    ed["isbn"] = eisbn
                    if e == 0:
                        ed["publish_year"] = 1960 + (i * 3 + k) % 60
                    elif k == 0:
                        gb_record(eisbn, with_blurb=e == 1, year=1999 + e)
                    ol_editions.append(ed)
        elif gr_matched(i):
            grid = f"gr{5000 + i}"
            for k in range(1 + i % 2):
                wid = f"{grid}-b{k}"
                work = {"source_id": wid, "title": f"{a['name']} story {k}",
                        "author_source_ids": [grid]}
                if k == 0:
                    work["blurb"] = f"Readers love this book by {a['name']}."
                isbn = next_isbn()
                work["isbn_list"] = [isbn]
                gb_record(isbn, with_blurb=False, year=2010 + k)
                gr_works.append(work)
                gr_editions.append({"source_id": f"{wid}-ed", "work_source_id": wid,
                                    "publisher": rng.choice(PUBLISHERS), "isbn": next_isbn()})

    # Co-authored OL work and a work by an unlinked OL author (dropped).
    ol_works.append({"source_id": "OLjoint-W", "title": "Joint Anthology",
                     "author_source_ids": [ol_link["Q1001"], ol_link["Q1002"]],
                     "isbn_list": ["0-306-40615-2", "123-bad"]})
    ol_works.append({"source_id": "OL950A-W0", "title": "Orphan", "author_source_ids": ["OL950A"]})
    ol_editions.append({"source_id": "OLjoint-E0", "work_source_id": "OLjoint-W",
                        "publisher": "Heinemann", "publish_country": "NG", "isbn": "0306406152"})
    ol_editions.append({"source_id": "OLdangling-E", "work_source_id": "OL-missing-W"})
    gb_record("9780306406157", year=1985)
    # Same ISBN in a second GB record; the lower id wins.
    gb.append({"source_id": "gb9999", "title": "Duplicate", "isbn_list": ["9780306406157"],
               "blurb": "Should lose the tie."})

    dump(SOURCES / "WD.authors.jsonl", wd)
    dump(SOURCES / "OL.authors.jsonl", ol)
    dump(SOURCES / "GR.authors.jsonl", gr, gr_malformed)
    dump(SOURCES / "WD.works.jsonl", wd_works)
    dump(SOURCES / "OL.works.jsonl", ol_works)
    dump(SOURCES / "GR.works.jsonl", gr_works)
    dump(SOURCES / "GB.works.jsonl", gb)
    dump(SOURCES / "OL.editions.jsonl", ol_editions)
    dump(SOURCES / "GR.editions.jsonl", gr_editions)
    dump(SOURCES / "WD.editions.jsonl", wd_editions)

    (HERE / "taxonomy.csv").write_text(
        "# Fixture taxonomy; edit freely.\ncountry_code,class\n"
        + "".join(f"{c},western\n" for c in WESTERN)
        + "".join(f"{c},former_colony\n" for c in COLONIES),
        encoding="utf-8",
    )
    (HERE / "minorities.csv").write_text(
        "country_code,ethnic_group\n" + "".join(f"{c},{g}\n" for c, g in MINORITIES),
        encoding="utf-8",
    )
    (HERE / "continents.csv").write_text(
        "country_code,continent\n" + "".join(f"{c},{n}\n" for c, n in sorted(CONTINENT.items())),
        encoding="utf-8",
    )


if __name__ == "__main__":
    main()
