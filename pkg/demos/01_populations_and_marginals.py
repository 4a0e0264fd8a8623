"""Walk through the core data model: schemas, cell codes, marginals.

Run:  python3 demos/01_populations_and_marginals.py
"""

import popmaxent as pm

# A population is just delimited text: header row of attribute names, one
# row per individual (or counted rows with a __count column).  Domains are
# fixed in order of first appearance.
text = """\
region,device,online
north,phone,yes
north,phone,yes
north,desktop,yes
south,phone,no
south,desktop,yes
south,phone,yes
east,phone,yes
east,desktop,no
"""

pop = pm.read_population_text(text)
print(f"attributes: {pop.schema.names}")
print(f"domains:    {[pop.schema.domain(a) for a in range(pop.schema.k)]}")
print(f"N = {pop.total}, distinct cells = {len(pop.cells)} of {pop.schema.n_cells}")

# Cells are addressed by a mixed-radix code, attribute 0 most significant.
print("\ncanonical cell enumeration:")
for cell in range(pop.schema.n_cells):
    assignment = pm.decode_cell(pop.schema, cell)
    labels = [pop.schema.domain(a)[v] for a, v in enumerate(assignment)]
    count = pop.count_of(cell)
    marker = f"  x{count}" if count else ""
    print(f"  {cell:2d} -> {labels}{marker}")

# Marginals are support-only frequency tables over 1 to 3 attributes.
print("\nunary marginal of region:")
for combo, freq in sorted(pm.marginal(pop, (0,)).cells.items()):
    print(f"  region={pop.schema.domain(0)[combo[0]]}: {freq:.3f}")

pair = pm.marginal(pop, (0, 2))
print(f"\nregion x online marginal has support {pair.support_size} "
      f"of {len(pop.schema.domain(0)) * len(pop.schema.domain(2))} combos")

# Patterns fix 1-3 attribute values; their empirical frequency is the
# fraction of matching individuals.
pattern = pm.Pattern.of({0: 0, 2: 0})  # region=north and online=yes
print(f"\nP(north, online=yes) = {pm.empirical_frequency(pop, pattern):.3f}")
