# heatbath package
