"""The two checks that do not hold as stated: boundary flux of the extension and the logarithmic inequality."""
from halfspace_hls.verify import check_harmonic_extension, check_log_hls

he = check_harmonic_extension()
print("extension of a bubble, -du/dn divided by the boundary density")
for key, val in he.details.items():
    print(f"   {key}: {val}")
print("   single-layer jump predicts 1/2 with this normalisation; a factor of 1 is not attainable\n")

lh = check_log_hls()
print(f"logarithmic inequality: passed={lh.passed}, worst slack {lh.residual:.3f}")
for key, val in lh.details.items():
    print(f"   {key}: {val}")
