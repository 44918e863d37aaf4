from src.cremona import degree_sequence, standard_involution
from src.halphen import quadratic_involution, isometry_degree, root_classes_mod_xi
from src.oscillate import OscillationTarget, synthesize_oscillation
from src.stability import make_family_fa, make_henon_map, stabilize_by_postcomposition

PRIME = 1000003


def show(name, report):
    label = report.classification.label if report.classification else "unclassified"
    print(f"{name}: degrees {report.degrees} ({label})")


def main():
    # Degree sequences of the standard examples
    print("Degree sequences")
    show("sigma", degree_sequence(standard_involution(), 6, PRIME))
    show("henon", degree_sequence(make_henon_map(), 6, PRIME))
    show("f_1", degree_sequence(make_family_fa(1), 6, PRIME))
    show("f_2", degree_sequence(make_family_fa(2), 6, PRIME))

    # A map whose degree dips once, at n = 2
    print("\nSynthesizing a map with deg(h^2) < deg(h)...")
    result = synthesize_oscillation(OscillationTarget({2: 1}), seed=17)
    print(f"d = {result.d}, degrees {result.degrees}, verified: {result.verified}")
    print(f"h = {result.map}")

    # sigma is not stable; a linear post-composition fixes that
    print("\nStabilizing sigma by post-composition...")
    found = stabilize_by_postcomposition(standard_involution(), seed=3, N=6)
    if found:
        A, certificate = found
        print(f"trial {certificate.trial}: degrees {certificate.degrees}")
    else:
        print("no stabilizer found")

    # The lattice side
    print("\nLattice Z^{1,9}")
    print(f"quadratic involution degree: {isometry_degree(quadratic_involution(1, 2, 3))}")
    print(f"root classes modulo xi: {len(root_classes_mod_xi())}")


if __name__ == "__main__":
    main()
