# PLU Lab Package
