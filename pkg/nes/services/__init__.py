"""Численное ядро: задачи, редукция переменных, оптимизаторы, индикаторы."""
